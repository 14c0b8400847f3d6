//! Flag parsing helpers and numeric formatting shared by the subcommands.

use anyhow::{bail, Result};
use onebit_put::ThetaSpec;

/// Parses a scalar that may be the literal `log2`.
pub fn parse_scalar(token: &str) -> Result<f64> {
    let token = token.trim();
    if token.eq_ignore_ascii_case("log2") {
        return Ok(std::f64::consts::LN_2);
    }
    match token.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => bail!("cannot parse number '{token}'"),
    }
}

/// Parses a sweep specification: either a single value or
/// `start:stop:step`, inclusive of `start` and of every point up to `stop`
/// within a 1e-12 tolerance.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_scalar(single)?]),
        [start, stop, step] => {
            let start = parse_scalar(start)?;
            let stop = parse_scalar(stop)?;
            let step = parse_scalar(step)?;
            if step <= 0.0 {
                bail!("grid step must be positive in '{spec}'");
            }
            if stop < start {
                bail!("grid stop is below start in '{spec}'");
            }
            let mut out = Vec::new();
            let mut k = 0u64;
            loop {
                let value = start + k as f64 * step;
                if value > stop + 1e-12 {
                    break;
                }
                out.push(value);
                k += 1;
            }
            Ok(out)
        }
        _ => bail!("grid '{spec}' must be a value or start:stop:step"),
    }
}

/// Parses a comma-separated list of alphabet sizes.
pub fn parse_v_list(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for tok in spec.split(',') {
        let v: usize = tok.trim().parse().map_err(|_| {
            anyhow::anyhow!("cannot parse alphabet size '{tok}'")
        })?;
        out.push(v);
    }
    if out.is_empty() {
        bail!("empty alphabet list");
    }
    Ok(out)
}

/// Parses `uniform`, `vertex:K` (1-based) or an explicit comma list.
pub fn parse_theta(spec: &str) -> Result<ThetaSpec> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("uniform") {
        return Ok(ThetaSpec::Uniform);
    }
    if let Some(rest) = spec.strip_prefix("vertex:") {
        let k: usize = rest.trim().parse().map_err(|_| {
            anyhow::anyhow!("cannot parse vertex index '{rest}'")
        })?;
        if k == 0 {
            bail!("vertex indices are 1-based");
        }
        return Ok(ThetaSpec::Vertex { x: k - 1 });
    }
    let probs: Vec<f64> = spec
        .split(',')
        .map(parse_scalar)
        .collect::<Result<_>>()?;
    if probs.len() < 2 {
        bail!("explicit theta needs at least two entries");
    }
    Ok(ThetaSpec::Explicit { probs })
}

/// Formats with 12 significant digits, plain decimal where reasonable.
pub fn fmt_sig(x: f64) -> String {
    const SIG: usize = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIG - 1, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp_str.parse().expect("exponent");
    if !(-4..=14).contains(&exp) {
        return sci;
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1; // decimal point position within the digit string
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..-point {
            out.push('0');
        }
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(parse_grid("0.1:4:0.1").unwrap().len(), 40);
        assert_eq!(parse_grid("1").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("log2").unwrap(), vec![std::f64::consts::LN_2]);
        assert_eq!(parse_grid("1:3:1").unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn theta_forms() {
        assert_eq!(parse_theta("uniform").unwrap(), ThetaSpec::Uniform);
        assert_eq!(parse_theta("vertex:1").unwrap(), ThetaSpec::Vertex { x: 0 });
        assert!(matches!(
            parse_theta("0.5,0.5").unwrap(),
            ThetaSpec::Explicit { .. }
        ));
        assert!(parse_theta("vertex:0").is_err());
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.5), "0.500000000000");
        assert_eq!(fmt_sig(2.0), "2.00000000000");
        assert_eq!(fmt_sig(-123.456), "-123.456000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1e-7), "1.00000000000e-7");
        // round-trips through f64 parsing to 12 significant digits
        for &x in &[8.45361156763, 0.311905358182, 139.125, 1.0 / 3.0] {
            let parsed: f64 = fmt_sig(x).parse().unwrap();
            assert!((parsed - x).abs() <= 1e-11 * x.abs().max(1.0));
        }
    }
}

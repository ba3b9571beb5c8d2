//! Parsers for the compact argument forms: `affine:a,b`, value lists and
//! ranges.

use sphere_oep::{profiles::Branch, NonlinearityDesc};

/// `affine:a,b` or `linear:a`.
pub fn parse_nonlinearity(s: &str) -> Result<NonlinearityDesc, String> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| format!("expected kind:coefficients, got {s:?}"))?;
    let nums = parse_list(rest)?;
    match (kind.trim(), nums.as_slice()) {
        ("affine", [a, b]) => Ok(NonlinearityDesc::Affine { a: *a, b: *b }),
        ("linear", [a]) => Ok(NonlinearityDesc::Affine { a: *a, b: 0.0 }),
        _ => Err(format!("unknown nonlinearity {s:?}; use affine:a,b or linear:a")),
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}")))
        .collect()
}

/// `a:b:step` (inclusive, rounded to the step) or a comma list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let [a, b, step] = [parts[0], parts[1], parts[2]].map(|t| t.trim().parse::<f64>());
        let (a, b, step) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?, step.map_err(|e| e.to_string())?);
        if !(step > 0.0) || b < a {
            return Err(format!("bad range {s:?}"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * step).map(|x| (x * 1e12).round() / 1e12).collect());
    }
    let v = parse_list(s)?;
    if v.is_empty() {
        return Err("empty value list".into());
    }
    Ok(v)
}

/// `name=values` for sweeps.
pub fn parse_param(s: &str) -> Result<(String, Vec<f64>), String> {
    let (name, values) = s.split_once('=').ok_or_else(|| format!("expected name=values, got {s:?}"))?;
    Ok((name.trim().to_string(), parse_values(values)?))
}

/// `amp,mode`.
pub fn parse_perturbation(s: &str) -> Result<(f64, u32), String> {
    let (a, m) = s.split_once(',').ok_or_else(|| format!("expected amp,mode, got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let m = m.trim().parse::<u32>().map_err(|e| e.to_string())?;
    Ok((a, m))
}

/// `1`, `2`, `lower` or `upper`.
pub fn parse_branch(s: &str) -> Result<Branch, String> {
    match s.trim() {
        "1" | "lower" => Ok(Branch::Lower),
        "2" | "upper" => Ok(Branch::Upper),
        _ => Err(format!("unknown branch {s:?}")),
    }
}

use crate::error::{Error, Result};

/// Cohen's kappa between two binary annotations,
/// `(p_o - p_e) / (1 - p_e)` with chance agreement from the marginals.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("kappa of empty label lists".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let a_pos = a.iter().filter(|&&x| x).count() as f64 / n;
    let b_pos = b.iter().filter(|&&x| x).count() as f64 / n;
    let p_o = agree / n;
    let p_e = a_pos * b_pos + (1.0 - a_pos) * (1.0 - b_pos);
    if p_e == 1.0 {
        // Both annotators used a single, identical class.
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

use std::collections::BTreeMap;

use super::params::ParameterSet;
use super::tape::{NodeId, Tape};
use crate::error::{Error, Result};

/// Denominator floor of the relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Worst relative error per parameter.
    pub per_param: BTreeMap<String, f64>,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// Difference quotient used by [`grad_check_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(θ+eps) - f(θ-eps)) / 2eps`
    Central,
    /// `(-f(θ+2eps) + 8f(θ+eps) - 8f(θ-eps) + f(θ-2eps)) / 12eps`. Truncation
    /// error is O(eps⁴), so a larger eps can be used against rounding.
    FourthOrder,
}

/// [`grad_check_with`] using the two-point central difference.
pub fn grad_check<F>(f: F, params: &mut ParameterSet, eps: f64) -> Result<GradCheck>
where
    F: FnMut(&mut Tape, &ParameterSet) -> Result<NodeId>,
{
    grad_check_with(f, params, eps, Stencil::Central)
}

/// Compares the tape gradient of `f` to a finite difference coordinate by
/// coordinate. `f` records the
/// loss on a fresh tape and returns its node. Parameter values are restored
/// before returning; gradients are left holding the analytic result.
pub fn grad_check_with<F>(mut f: F, params: &mut ParameterSet, eps: f64, stencil: Stencil) -> Result<GradCheck>
where
    F: FnMut(&mut Tape, &ParameterSet) -> Result<NodeId>,
{
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::InvalidArgument(format!("eps must be in (0, 1e-2], got {eps}")));
    }
    params.zero_grads();
    {
        let mut tape = Tape::new();
        let loss = f(&mut tape, params)?;
        if !tape.value(loss).item().is_some_and(f64::is_finite) {
            return Err(Error::NonFinite("objective value".into()));
        }
        tape.backward(loss, params)?;
    }

    let mut eval = |params: &ParameterSet| -> Result<f64> {
        let mut tape = Tape::new();
        let loss = f(&mut tape, params)?;
        let v = tape
            .value(loss)
            .item()
            .ok_or_else(|| Error::InvalidArgument("loss is not a scalar".into()))?;
        if !v.is_finite() {
            return Err(Error::NonFinite("objective value".into()));
        }
        Ok(v)
    };

    let names: Vec<String> = params.names().map(str::to_string).collect();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        per_param: BTreeMap::new(),
        worst: None,
    };
    for name in names {
        let analytic = params.grad(&name).expect("listed").to_vec();
        let mut worst_here: f64 = 0.0;
        for (i, &a) in analytic.iter().enumerate() {
            let orig = params.value(&name).expect("listed").data()[i];
            let mut at = |step: f64| {
                params.value_mut(&name).expect("listed").data_mut()[i] = orig + step * eps;
                let v = eval(params);
                params.value_mut(&name).expect("listed").data_mut()[i] = orig;
                v
            };
            let numeric = match stencil {
                Stencil::Central => (at(1.0)? - at(-1.0)?) / (2.0 * eps),
                Stencil::FourthOrder => {
                    let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
                    (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * eps)
                }
            };
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            worst_here = worst_here.max(rel);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
        report.per_param.insert(name, worst_here);
    }
    Ok(report)
}

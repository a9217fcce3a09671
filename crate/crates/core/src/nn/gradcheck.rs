//! Central finite-difference checks of tape gradients.

use rand::seq::index::sample;
use rand::Rng;

use super::params::{Gradients, ParamId, ParamStore};
use super::tape::{Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

/// `|a − n| / max(|a|, |n|, 1e-4)`; the floor keeps near-zero gradients from
/// inflating the ratio with pure round-off.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compare analytic gradients of the scalar built by `loss` against central
/// differences with step `h`, on up to `per_param` random entries of each
/// parameter in `ids`.
pub fn check<R, F>(store: &mut ParamStore, ids: &[ParamId], h: f64, per_param: usize, rng: &mut R, loss: F) -> GradCheck
where
    R: Rng,
    F: Fn(&mut Tape) -> Var,
{
    let mut grads = Gradients::zeros_like(store);
    {
        let mut tape = Tape::new(store);
        let out = loss(&mut tape);
        tape.backward(out, &mut grads);
    }
    let eval = |store: &ParamStore| {
        let mut tape = Tape::new(store);
        let out = loss(&mut tape);
        tape.scalar(out)
    };

    let mut report = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
    };
    for &id in ids {
        let len = store.get(id).data.len();
        let picks: Vec<usize> = if len <= per_param {
            (0..len).collect()
        } else {
            sample(rng, len, per_param).into_vec()
        };
        for k in picks {
            let orig = store.get(id).data[k];
            store.get_mut(id).data[k] = orig + h;
            let plus = eval(store);
            store.get_mut(id).data[k] = orig - h;
            let minus = eval(store);
            store.get_mut(id).data[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(grads.get(id)[k], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((store.get(id).name.clone(), k));
            }
        }
    }
    report
}

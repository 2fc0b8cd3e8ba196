use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParamStore, Tape, Var};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step, restricted to `[1e-7, 1e-4]`.
    pub eps: f64,
    /// Coordinates sampled per parameter; smaller tensors are checked fully.
    pub max_coords_per_param: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-5,
            max_coords_per_param: 24,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
}

/// Relative discrepancy used by the checker.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares tape gradients of `f` with central finite differences.
///
/// `f` records a scalar loss on the tape it is given, reading parameters
/// from the store it is given.
pub fn grad_check<F>(store: &ParamStore, opts: &GradCheckOptions, mut f: F) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    if !(1e-7..=1e-4).contains(&opts.eps) {
        return Err(Error::Config(format!(
            "gradient check epsilon {} outside [1e-7, 1e-4]",
            opts.eps
        )));
    }
    let mut work = store.clone();
    work.clear_grads();
    let mut tape = Tape::new();
    tape.set_checked(true);
    let loss = f(&mut tape, &work)?;
    tape.backward_into(loss, &mut work)?;
    let analytic: Vec<Vec<f64>> = work
        .iter()
        .map(|(_, t)| t.grad().map_or_else(|| vec![0.0; t.numel()], <[f64]>::to_vec))
        .collect();
    work.clear_grads();

    let mut eval = |work: &ParamStore| -> Result<f64> {
        let mut tape = Tape::inference();
        tape.set_checked(true);
        let loss = f(&mut tape, work)?;
        Ok(tape.value(loss).item())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coords_checked: 0,
    };
    let ids: Vec<_> = work.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let n = work.get(id).numel();
        let coords: Vec<usize> = if n <= opts.max_coords_per_param {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, opts.max_coords_per_param).into_vec();
            c.sort_unstable();
            c
        };
        for j in coords {
            let orig = work.get(id).data()[j];
            work.get_mut(id).data_mut()[j] = orig + opts.eps;
            let plus = eval(&work)?;
            work.get_mut(id).data_mut()[j] = orig - opts.eps;
            let minus = eval(&work)?;
            work.get_mut(id).data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * opts.eps);
            if !numeric.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite numeric gradient for {}[{j}]",
                    work.name(id)
                )));
            }
            let err = relative_error(analytic[pi][j], numeric);
            report.coords_checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = err;
                report.worst = Some((work.name(id).to_string(), j));
            }
        }
    }
    Ok(report)
}

use crate::error::{domain, Result};

/// Turn utilities `u[n][s][a][x]` into kernels `p[n][s][a][x]` of the same
/// shape.
///
/// At temperature 0 each row is uniform over the maximizers of `u`; above 0
/// it is the softmax of `u / temperature`.
pub fn best_response_kernel(
    utilities: &[Vec<Vec<Vec<f64>>>],
    temperature: f64,
) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
    if !temperature.is_finite() || temperature < 0.0 {
        return domain(format!(
            "temperature must be finite and >= 0, got {temperature}"
        ));
    }
    if utilities
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .any(|u| !u.is_finite())
    {
        return domain("utilities must be finite");
    }
    Ok(utilities
        .iter()
        .map(|per_state| {
            per_state
                .iter()
                .map(|per_action| {
                    per_action
                        .iter()
                        .map(|u| response_row(u, temperature))
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// One row of [`best_response_kernel`].
pub fn response_row(u: &[f64], temperature: f64) -> Vec<f64> {
    let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if temperature == 0.0 {
        let ties = u.iter().filter(|&&x| x == best).count() as f64;
        return u
            .iter()
            .map(|&x| if x == best { 1.0 / ties } else { 0.0 })
            .collect();
    }
    let weights: Vec<f64> = u
        .iter()
        .map(|&x| ((x - best) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_maximizer_gets_all_mass() {
        assert_eq!(response_row(&[0.1, 0.7, 0.3], 0.0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn ties_split_evenly() {
        assert_eq!(response_row(&[2.0, 1.0, 2.0], 0.0), vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn hot_softmax_is_nearly_uniform() {
        let u = [0.0, 0.25, 1.0, 0.5];
        let row = response_row(&u, 1e6);
        // closed form: exp(u_i/t) / sum_j exp(u_j/t)
        let z: f64 = u.iter().map(|x| (x / 1e6f64).exp()).sum();
        for (p, x) in row.iter().zip(u) {
            assert!((p - (x / 1e6f64).exp() / z).abs() < 1e-15);
            assert!((p - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn rejects_negative_temperature() {
        assert!(best_response_kernel(&[], -1.0).is_err());
    }
}

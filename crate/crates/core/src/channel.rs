//! Uplink channel: Nakagami-m fading, log-distance path loss, log-normal
//! shadowing, a LoS/NLoS mixture, and NOMA rates under SIC decoding.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::config::{ChannelParams, LosModel};
use crate::error::{Error, Result};

/// Envelope amplitude `h` with `h^2 ~ Gamma(m, p_bar / m)`.
pub fn sample_small_scale<R: Rng + ?Sized>(m: f64, p_bar: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(m, p_bar / m).expect("m and p_bar validated positive");
    g.sample(rng).sqrt()
}

/// Linear attenuation at distance `d`; distances below `d0` are clamped.
pub fn path_loss(d: f64, params: &ChannelParams, los: bool) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain("path loss needs a positive distance"));
    }
    let d0 = params.reference_distance;
    let beta = if los {
        params.pathloss_exp_los
    } else {
        params.pathloss_exp_nlos
    };
    let k = 4.0 * std::f64::consts::PI * d0 * params.carrier_hz / params.light_speed;
    Ok(k * k * (d.max(d0) / d0).powf(beta))
}

pub fn los_probability(d: f64, params: &ChannelParams) -> f64 {
    match params.los_model {
        LosModel::Constant => params.los_probability,
        LosModel::Exponential => params.los_probability * (-d / params.los_decay_m).exp(),
    }
}

fn branch_gain<R: Rng + ?Sized>(d: f64, params: &ChannelParams, los: bool, rng: &mut R) -> f64 {
    let (m, sigma) = if los {
        (params.nakagami_m_los, params.shadowing_db_los)
    } else {
        (params.nakagami_m_nlos, params.shadowing_db_nlos)
    };
    let h = sample_small_scale(m, params.fading_power, rng);
    let chi = if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .expect("sigma validated finite")
            .sample(rng)
    } else {
        0.0
    };
    let l = path_loss(d, params, los).expect("distance clamped positive by caller");
    h * h / l * 10f64.powf(-chi / 10.0)
}

/// Mixed LoS/NLoS power gain at 3-D distance `d`. Both branches are always
/// sampled so the stream advances identically whatever `p_L` is.
pub fn channel_gain<R: Rng + ?Sized>(d: f64, params: &ChannelParams, rng: &mut R) -> f64 {
    let d = d.max(params.reference_distance);
    let p = los_probability(d, params);
    let g_l = branch_gain(d, params, true, rng);
    let g_nl = branch_gain(d, params, false, rng);
    let g = p * g_l + (1.0 - p) * g_nl;
    g.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uploader {
    /// Identifier used for tie-breaking (lower decodes first on equal gain).
    pub key: u64,
    pub gain: f64,
    pub power: f64,
}

/// Decoding order: strongest gain first, ties by key.
pub fn sic_order(uploaders: &mut [Uploader]) {
    uploaders.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.key.cmp(&b.key)));
}

/// Rate of `target` when every uploader in the set transmits at once.
/// Interference comes only from uploaders decoded after the target.
pub fn noma_uplink_rate(
    uploaders: &[Uploader],
    target: u64,
    bandwidth: f64,
    noise: f64,
) -> Result<f64> {
    let mut ordered = uploaders.to_vec();
    sic_order(&mut ordered);
    let pos = ordered
        .iter()
        .position(|u| u.key == target)
        .ok_or(Error::Domain("target is not among the uploaders"))?;
    let me = ordered[pos];
    let interference: f64 = ordered[pos + 1..].iter().map(|u| u.power * u.gain).sum();
    Ok(bandwidth * (1.0 + me.power * me.gain / (noise + interference)).log2())
}

/// Rates for the whole set in one pass, returned in the caller's order.
pub fn noma_rates(uploaders: &[Uploader], bandwidth: f64, noise: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..uploaders.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ua, ub) = (&uploaders[a], &uploaders[b]);
        ub.gain.total_cmp(&ua.gain).then(ua.key.cmp(&ub.key))
    });
    let mut rates = vec![0.0; uploaders.len()];
    let mut tail: f64 = 0.0;
    for &i in idx.iter().rev() {
        let u = &uploaders[i];
        rates[i] = bandwidth * (1.0 + u.power * u.gain / (noise + tail)).log2();
        tail += u.power * u.gain;
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn moments(m: f64, n: usize) -> (f64, f64) {
        let mut r = rng();
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_small_scale(m, 1.0, &mut r).powi(2))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn nakagami_moments() {
        // Rayleigh: exponential power, variance 1
        let (mean, var) = moments(1.0, 200_000);
        assert!((mean - 1.0).abs() < 0.01);
        assert!((var - 1.0).abs() < 0.03);
        let (mean, _) = moments(2.0, 1_000_000);
        assert!((mean - 1.0).abs() < 0.01);
        let (mean, var) = moments(5.0, 1_000_000);
        assert!((mean - 1.0).abs() < 0.01);
        assert!((var - 0.2).abs() < 0.01);
    }

    #[test]
    fn path_loss_forms() {
        let p = ChannelParams::default();
        let k = (4.0 * std::f64::consts::PI * 5.9e9 / 3e8).powi(2);
        assert!((path_loss(1.0, &p, true).unwrap() - k).abs() / k < 1e-12);
        let a = path_loss(50.0, &p, true).unwrap();
        let b = path_loss(100.0, &p, true).unwrap();
        assert!((b / a - 8.0).abs() < 1e-9);
        // log-domain cross-check at 100 m
        let db = 20.0 * (4.0 * std::f64::consts::PI * 5.9e9 / 3e8).log10() + 30.0 * 100f64.log10();
        assert!((10.0 * b.log10() - db).abs() < 1e-9);
        assert!(path_loss(0.0, &p, true).is_err());
        assert_eq!(path_loss(0.5, &p, true).unwrap(), path_loss(1.0, &p, true).unwrap());
    }

    #[test]
    fn degenerate_mixture_is_los_branch() {
        let p = ChannelParams {
            los_probability: 1.0,
            ..ChannelParams::default()
        };
        let mut r1 = rng();
        let mut r2 = rng();
        let g = channel_gain(80.0, &p, &mut r1);
        let g_l = branch_gain(80.0, &p, true, &mut r2);
        assert_eq!(g, g_l);
    }

    #[test]
    fn near_deterministic_gain() {
        let p = ChannelParams {
            los_probability: 1.0,
            nakagami_m_los: 5.0,
            shadowing_db_los: 0.0,
            ..ChannelParams::default()
        };
        let mut r = rng();
        let n = 100_000;
        let mean = (0..n).map(|_| channel_gain(60.0, &p, &mut r)).sum::<f64>() / n as f64;
        let inv = 1.0 / path_loss(60.0, &p, true).unwrap();
        assert!((mean / inv - 1.0).abs() < 0.01);
    }

    #[test]
    fn mixture_mean() {
        let p = ChannelParams::default();
        let d = 40.0;
        // E[10^(-chi/10)] = exp((sigma ln10 / 10)^2 / 2)
        let shadow = |s: f64| ((s * std::f64::consts::LN_10 / 10.0).powi(2) / 2.0).exp();
        let e_l = shadow(p.shadowing_db_los) / path_loss(d, &p, true).unwrap();
        let e_nl = shadow(p.shadowing_db_nlos) / path_loss(d, &p, false).unwrap();
        let expect = 0.8 * e_l + 0.2 * e_nl;
        let mut r = rng();
        let n = 1_000_000;
        let mean = (0..n).map(|_| channel_gain(d, &p, &mut r)).sum::<f64>() / n as f64;
        assert!((mean / expect - 1.0).abs() < 0.02, "{mean} vs {expect}");
    }

    #[test]
    fn single_uploader_unit_snr() {
        let u = [Uploader {
            key: 0,
            gain: 1e-10,
            power: 1e-3,
        }];
        let r = noma_uplink_rate(&u, 0, 40e6, 1e-13).unwrap();
        assert!((r - 4.0e7).abs() < 1e-3);
    }

    #[test]
    fn sic_interference_direction() {
        let u = [
            Uploader { key: 0, gain: 1e-9, power: 1.0 },
            Uploader { key: 1, gain: 1e-10, power: 1.0 },
        ];
        let n0 = 1e-12;
        let strong = noma_uplink_rate(&u, 0, 1.0, n0).unwrap();
        let weak = noma_uplink_rate(&u, 1, 1.0, n0).unwrap();
        assert!((strong - (1.0 + 1e-9 / (n0 + 1e-10)).log2()).abs() < 1e-12);
        assert!((weak - (1.0 + 1e-10 / n0).log2()).abs() < 1e-12);
        assert!(noma_uplink_rate(&u, 9, 1.0, n0).is_err());
    }

    #[test]
    fn three_uploaders_per_rank() {
        let u = [
            Uploader { key: 5, gain: 2e-10, power: 2.0 },
            Uploader { key: 3, gain: 7e-10, power: 1.0 },
            Uploader { key: 9, gain: 1e-10, power: 4.0 },
        ];
        let (b, n0): (f64, f64) = (40e6, 1.6e-13);
        // decode order: 3, 5, 9
        let expect = [
            b * (1.0 + 4e-10 / (n0 + 4e-10)).log2(),
            b * (1.0 + 7e-10 / (n0 + 4e-10 + 4e-10)).log2(),
            b * (1.0 + 4e-10 / n0).log2(),
        ];
        let batch = noma_rates(&u, b, n0);
        for (i, up) in u.iter().enumerate() {
            let single = noma_uplink_rate(&u, up.key, b, n0).unwrap();
            assert!((single - expect[i]).abs() / expect[i] < 1e-12);
            assert!((batch[i] - expect[i]).abs() / expect[i] < 1e-12);
        }
    }
}

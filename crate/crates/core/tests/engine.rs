use ofdm_ici::analytic::{awgn_qam_bep, symbol_bep};
use ofdm_ici::channel::{builtin_profile, realize, DopplerConfig};
use ofdm_ici::montecarlo::{instantaneous, run_ber, SimSpec};
use ofdm_ici::{coefficient_set, ChannelRealization, OfdmConfig};

#[test]
fn binomial_consistency_over_seeds() {
    // QPSK at r = 2 on the identity channel.
    let cfg = OfdmConfig::lte_10mhz(4).unwrap().with_noise_density(0.25).unwrap();
    let p = awgn_qam_bep(4, 2.0).unwrap();
    let mut inside = 0;
    for seed in 0..100 {
        let r = run_ber(&SimSpec::new(cfg.clone(), vec![(0, 7)], 4000, seed), &ChannelRealization::identity()).unwrap()[0];
        let sigma = (p * (1.0 - p) / r.total_bits as f64).sqrt();
        if (r.ber - p).abs() < 4.0 * sigma {
            inside += 1;
        }
    }
    assert!(inside >= 99, "{inside} of 100 runs within 4 sigma");
}

#[test]
fn ici_dominates_noise_at_high_snr() {
    let prof = builtin_profile("itu_vehicular").unwrap();
    for order in [4, 16, 64] {
        let cfg = OfdmConfig::lte_10mhz(order).unwrap().with_ebno_db(50.0).unwrap();
        for seed in 0..10 {
            let chan = realize(&prof, &DopplerConfig::new(750.0, 8, seed).unwrap(), 0.0);
            let m = symbol_bep(&cfg, &coefficient_set(&cfg, &chan, 0, 150).unwrap()).unwrap();
            assert!(m.noise_density * 10.0 < m.ici_variance, "{m:?}");
        }
    }
}

#[test]
fn bep_bounds_ber_at_high_sinr() {
    let prof = builtin_profile("itu_vehicular").unwrap();
    let cfg = OfdmConfig::lte_10mhz(64).unwrap().with_ebno_db(50.0).unwrap();
    let dop = DopplerConfig::new(0.05 * cfg.subcarrier_spacing, 8, 77).unwrap();
    let spec = SimSpec::new(cfg, vec![(0, 150)], 20_000, 5);
    let rows = instantaneous(&spec, &prof, &dop, 100).unwrap();
    let mut rho: Vec<f64> = rows
        .iter()
        .filter(|r| r.metrics.is_some_and(|m| m.bep < 1e-2))
        .filter_map(|r| r.ber.rho)
        .collect();
    assert!(rho.len() >= 20, "only {} usable symbols", rho.len());
    rho.sort_by(f64::total_cmp);
    let p95 = ofdm_ici::montecarlo::quantile_sorted(&rho, 0.95);
    assert!(p95 <= 1.1, "p95 rho {p95}");
}

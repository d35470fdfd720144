use bundleduel_core::bench::{truncated_sigma, truncated_welfare, upper_bound_check};
use bundleduel_core::counterexample::build_counterexample;
use bundleduel_core::dist::DiscreteDistribution;
use bundleduel_core::game::Game;
use bundleduel_core::grid::ValueGrid;
use bundleduel_core::instance::MarketInstance;
use bundleduel_core::menu::Menu;
use bundleduel_core::solver::{solve, verify_equilibrium, CertificateDocument, SolveOptions};
use bundleduel_core::strategy::pure_profile;

fn binary_pair() -> MarketInstance {
    let d = DiscreteDistribution::binary(ValueGrid::new(0.1, 100.0).unwrap(), 100.0, 0.1).unwrap();
    MarketInstance::new(vec![d.clone(), d]).unwrap()
}

#[test]
fn binary_item_constants() {
    let inst = binary_pair();
    let d = inst.dist(0);
    assert_eq!(d.myerson_price(), 100.0);
    assert!((d.revenue_at(100.0) - 10.0).abs() < 1e-12);
    assert!((d.truncated_variance(100.0) - 900.0).abs() < 1e-9);
    assert!((truncated_welfare(&inst) - 20.0).abs() < 1e-12);
    assert!((truncated_sigma(&inst) - 1800f64.sqrt()).abs() < 1e-9);
}

#[test]
fn distribution_text_round_trips() {
    let d = binary_pair().dist(0).clone();
    assert_eq!(DiscreteDistribution::parse(&d.to_text()).unwrap(), d);
}

#[test]
fn myerson_profile_is_an_exact_equilibrium_and_round_trips() {
    let inst = binary_pair();
    let r = inst.myerson_ticks();
    let game = Game::new(inst.clone(), Menu::grand_bundle(2, 100.1).unwrap()).unwrap();
    let cert = verify_equilibrium(&game, &pure_profile(&r), 1e-9).unwrap();
    assert_eq!(cert.epsilon, 0.0);
    assert!(upper_bound_check(&inst, &cert, 1e-9).unwrap().holds);

    let doc = cert.to_document(&game);
    let text = serde_json::to_string(&doc).unwrap();
    let back: CertificateDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn single_pair_solve_finds_only_the_myerson_profile() {
    let game = Game::new(binary_pair(), Menu::grand_bundle(2, 100.1).unwrap()).unwrap();
    let rep = solve(&game, &SolveOptions::default()).unwrap();
    assert_eq!(rep.equilibria.len(), 1);
    let rev = rep.min_revenue.unwrap();
    // The bundle sells only when both items are high: 100.1 * 0.01.
    assert!((rev - 1.001).abs() < 1e-9, "{rev}");
}

#[test]
fn counterexample_parameters() {
    let (inst, spec) = build_counterexample(3, 2, 1.0).unwrap();
    assert_eq!(inst.items(), 4);
    assert_eq!(spec.h, vec![9.0, 729.0]);
    assert_eq!(spec.x_denominators, vec![3, 27]);
    assert!(spec.identity_holds());
    assert!(build_counterexample(2, 2, 1.0).is_err());
}

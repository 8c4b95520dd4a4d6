//! End-to-end prediction check for the A family, whose real section comes
//! from the phase-normalized recipe rather than a closed trig form.

use qrw2d::asymptotics::{assemble_direction, critical_points, predicted_probability, Direction};
use qrw2d::model::make_a;
use qrw2d::simulate::evolve;
use qrw2d::tolerances::Tolerances;
use qrw2d::variety::Variety;
use qrw2d::C64;

#[test]
fn a_family_interior_predictions_track_the_simulator() {
    let model = make_a(1.0 / 3.0).unwrap();
    let variety = Variety::new(model.clone());
    let tol = Tolerances::default();
    let n = 200usize;
    let e1 = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ];
    let grid = evolve(&model, e1, n).unwrap().probability_profile();
    let mut rels = Vec::new();
    for (a, b) in [
        (2i64, 0i64),
        (0, 2),
        (2, 2),
        (4, 0),
        (1, 3),
        (3, 1),
        (4, 2),
        (1, 1),
    ] {
        let dir = Direction::new(a * n as i64 / 20, b * n as i64 / 20, n as i64);
        assert!(dir.parity_ok());
        let w = critical_points(&variety, dir.velocity(), &tol);
        if w.is_empty() || w.iter().any(|cp| cp.point.curvature.abs() < 1e-3) {
            continue;
        }
        let data = assemble_direction(&variety, dir, w, &tol);
        let pred = predicted_probability(&data, &variety, e1);
        let exact = grid.at(dir.r as i32, dir.s as i32);
        assert!(exact > 0.0);
        rels.push((pred - exact).abs() / exact);
    }
    assert!(rels.len() >= 5, "only {} usable directions", rels.len());
    rels.sort_by(f64::total_cmp);
    let median = rels[rels.len() / 2];
    assert!(median <= 0.2, "median relative error {median} at n = {n}");
}

//! Regenerates the sample files in `data/`.
//!
//! cargo run --example export_models -- [output-dir]

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::PathBuf;

use uncertainty::measurement::{IndirectModel, JointModel};
use uncertainty::model_file::{Model, ModelDocument};
use uncertainty::operator::{Operator, StateVector};
use uncertainty::periodic_box::{seeded_band_limited, write_samples};
use uncertainty::spin::{self, SpinScenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    fs::create_dir_all(&dir)?;

    let plus_z = StateVector::basis(2, 0);
    let spin0 = SpinScenario::new(0.0)?;
    ModelDocument::new(Model::Indirect(spin0.dilated_model()), vec![plus_z.clone()]).save(&dir.join("spin_phi0.json"))?;

    let detuned = SpinScenario::new(FRAC_PI_4)?;
    ModelDocument::new(Model::Projective(detuned.projective_model()), vec![plus_z.clone()])
        .save(&dir.join("spin_projective_pi4.json"))?;

    let idle = IndirectModel::no_interaction(
        Operator::pauli_z(),
        StateVector::basis(2, 0),
        Operator::pauli_x(),
        Operator::pauli_y(),
    )?;
    ModelDocument::new(Model::Indirect(idle), vec![plus_z.clone()]).save(&dir.join("identity_u.json"))?;

    ModelDocument::new(Model::Joint(JointModel::sequential_xy()), vec![plus_z]).save(&dir.join("sequential_joint.json"))?;

    let rows = spin::sweep(spin::DEFAULT_STEPS)?;
    let angles: Vec<f64> = rows.iter().step_by(8).map(|r| r.phi).collect();
    let points = spin::synthetic_points(&angles)?;
    let mut buf = Vec::new();
    spin::write_points(&points, &mut buf, Some("synthetic points on the analytic curves"))?;
    fs::write(dir.join("analytic_points.csv"), buf)?;

    let state = seeded_band_limited(2024, 0, 1.0, 64)?;
    let mut buf = Vec::new();
    write_samples(&state, &mut buf)?;
    fs::write(dir.join("band_limited_64.txt"), buf)?;

    println!("wrote sample files to {}", dir.display());
    Ok(())
}

//! Regenerate `instances/specs/*.json` from the library builders. Run from
//! the workspace root, then rebuild the instances with `gcs-walks build`.

use gcs_walks::library::*;
fn main() {
    let dir = std::path::Path::new("instances/specs");
    std::fs::create_dir_all(dir).unwrap();
    let specs = [
        ("planar", InstanceSpec::Planar { variant: PlanarVariant::Standard }),
        ("planar_quadratic", InstanceSpec::Planar { variant: PlanarVariant::QuadraticOnly }),
        ("planar_source_box", InstanceSpec::Planar { variant: PlanarVariant::SourceBox }),
        ("pendulum", InstanceSpec::Pwa(pendulum_spec())),
        ("pendulum_source_box", InstanceSpec::Pwa(pendulum_source_box_spec())),
        ("corridor", InstanceSpec::Bezier(corridor_spec())),
        ("gripper", InstanceSpec::Skills(gripper_spec())),
    ];
    for (name, s) in specs {
        gcs_walks::io::write_json(&dir.join(format!("{name}.json")), &s).unwrap();
    }
}

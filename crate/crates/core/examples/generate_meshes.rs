//! Generate icospheres and the aircraft-like surface, and print topology.
//!
//! `cargo run --release --example generate_meshes -- [output_dir]`

use std::path::PathBuf;

use efie_spectral::mesh::{generate_aircraft_like, generate_icosphere, MeshFormat, TriangleMesh};

fn describe(name: &str, m: &TriangleMesh) {
    let (v, e, f) = (m.num_vertices(), m.num_edges(), m.num_triangles());
    println!(
        "{name:>14}: V={v:5} E={e:5} F={f:5} V-E+F={} mean edge {:.4} volume {:.4}",
        v as i64 - e as i64 + f as i64,
        m.h(),
        m.signed_volume()
    );
}

fn main() -> efie_spectral::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    for s in 0..=3 {
        let m = generate_icosphere(s, 1.0)?;
        describe(&format!("icosphere({s})"), &m);
        m.write(&dir.join(format!("icosphere{s}.off")), MeshFormat::Off)?;
    }
    let air = generate_aircraft_like(10)?;
    describe("aircraft-like", &air);
    air.write(&dir.join("aircraft_like.msh"), MeshFormat::GmshV2)?;
    println!("meshes written to {}", dir.display());
    Ok(())
}

use bianchi::exact::ring_basis;
use bianchi::swan::{compute_floor, side_pairings};

fn main() {
    for m in [2u64, 11] {
        let b = ring_basis(m).unwrap();
        let t = std::time::Instant::now();
        let mut fc = compute_floor(b, 10_000).unwrap();
        eprintln!(
            "m={m}: {} faces, bound {}, witnesses {:?}, {} hemis, {:?}",
            fc.faces.len(),
            fc.norm_bound,
            fc.witnesses,
            fc.hemispheres.len(),
            t.elapsed()
        );
        for (p, h) in fc.vertices_mod_lattice() {
            eprintln!("  vertex ({:?}, {:?}) rsq={:?}", p.a, p.b, h);
        }
        let t = std::time::Instant::now();
        side_pairings(&mut fc).unwrap();
        eprintln!("  pairings: {} in {:?}", fc.pairings.len(), t.elapsed());
        for p in &fc.pairings {
            eprintln!("  {} -> {} via {:?}", p.face, p.mate, p.elt);
        }
    }
}

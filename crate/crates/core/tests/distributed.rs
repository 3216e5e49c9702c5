//! Loopback runs of the distributed factorization against the sequential one.

use dhif::dist::{
    apply_inverse_distributed, factorize_distributed, gather_factorization, gather_vector, run_loopback, CommStats,
    Phase,
};
use dhif::geometry::{assemble_stencil, CoefficientField, FieldKind, GridSpec, SparseSymMatrix};
use dhif::hif::factorize;
use dhif::krylov::gaussian_vector;

fn problem(n: usize, kind: FieldKind) -> (GridSpec, SparseSymMatrix) {
    let spec = GridSpec::new(n).unwrap();
    let field = CoefficientField::new(&spec, kind, 11);
    let a = assemble_stencil(&spec, &field).unwrap();
    (spec, a)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn check_matches_sequential(n: usize, p: usize, eps: f64) {
    let (spec, a) = problem(n, FieldKind::RandomHighContrast);
    let seq = factorize(&a, &spec, eps).unwrap();
    let x = gaussian_vector(spec.num_dofs(), 3);
    let want = seq.apply_inverse(&x).unwrap();
    let out = run_loopback(p, |comm| {
        let lf = factorize_distributed(comm, &a, &spec, eps)?;
        let g = gather_factorization(comm, &lf)?;
        let y = apply_inverse_distributed(comm, &lf, &x)?;
        let y = gather_vector(comm, &lf, &y)?;
        Ok((g, y))
    })
    .unwrap();
    let (g, y) = &out[0].0;
    let g = g.as_ref().unwrap();
    assert_eq!(g.levels, seq.levels, "level factors differ for P={p}");
    assert_eq!(g.root, seq.root, "root factor differs for P={p}");
    assert_eq!(bits(y.as_ref().unwrap()), bits(&want), "solve differs for P={p}");

    let stats = CommStats::sum(out.iter().map(|(_, c)| &c.stats));
    for phase in Phase::ALL {
        let s = stats.phase(phase);
        assert_eq!(s.bytes_sent, s.bytes_recv, "{phase:?}");
        assert_eq!(s.msgs_sent, s.msgs_recv, "{phase:?}");
    }
}

#[test]
fn one_rank_matches_sequential() {
    check_matches_sequential(16, 1, 1e-3);
}

#[test]
fn eight_ranks_match_sequential() {
    check_matches_sequential(16, 8, 1e-3);
}

#[test]
fn sixty_four_ranks_match_sequential() {
    check_matches_sequential(16, 64, 1e-6);
}

#[test]
fn exchange_partners_are_face_neighbors() {
    let (spec, a) = problem(16, FieldKind::Constant);
    let out = run_loopback(8, |comm| {
        factorize_distributed(comm, &a, &spec, 1e-3)?;
        Ok(())
    })
    .unwrap();
    let own = dhif::dist::Ownership::new(&spec, &dhif::dist::ProcessTree::new(8).unwrap()).unwrap();
    for (_, comm) in &out {
        let level0: Vec<_> = comm.exchange_log.iter().filter(|r| r.level == 0).collect();
        // Two ranks per dimension: one partner per axis.
        assert_eq!(level0.len(), 3, "rank {}", comm.rank());
        for r in &comm.exchange_log {
            assert_eq!(own.cell_owner(r.level, r.src_cell), r.src);
            assert_eq!(own.cell_owner(r.level, r.dst_cell), r.dst);
            let mut e = [0isize; 3];
            e[r.axis] = 1;
            assert_eq!(own.shifted(r.level, r.src_cell, e), r.dst_cell);
        }
        for r in level0 {
            let (ls, ld) = (own.tree.leaf_index(r.src), own.tree.leaf_index(r.dst));
            let w = own.tree.width();
            for d in 0..3 {
                let want = if d == r.axis { (ls[d] + 1) % w } else { ls[d] };
                assert_eq!(ld[d], want);
            }
        }
    }
}

#[test]
fn rejects_bad_process_counts() {
    let (spec, a) = problem(8, FieldKind::Constant);
    assert!(run_loopback(4, |comm| factorize_distributed(comm, &a, &spec, 1e-3)).is_err());
    assert!(run_loopback(64, |comm| factorize_distributed(comm, &a, &spec, 1e-3)).is_err());
}

#[test]
fn sockets_match_loopback() {
    use dhif::dist::{Comm, Socket};
    use std::net::{SocketAddr, TcpListener};
    use std::time::Duration;

    let (spec, a) = problem(8, FieldKind::RandomHighContrast);
    let seq = factorize(&a, &spec, 1e-3).unwrap();
    let x = gaussian_vector(spec.num_dofs(), 5);
    let want = seq.apply_inverse(&x).unwrap();
    let roster: Vec<SocketAddr> = (0..8)
        .map(|_| TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap())
        .collect();
    let results: Vec<Option<Vec<f64>>> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..8)
            .map(|rank| {
                let (roster, a, x) = (&roster, &a, &x);
                s.spawn(move || {
                    let t = Socket::connect(roster, rank, Duration::from_secs(20)).unwrap();
                    let mut comm = Comm::new(Box::new(t));
                    let lf = factorize_distributed(&mut comm, a, &spec, 1e-3).unwrap();
                    let y = apply_inverse_distributed(&mut comm, &lf, x).unwrap();
                    let y = gather_vector(&mut comm, &lf, &y).unwrap();
                    comm.barrier().unwrap();
                    y
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(bits(results[0].as_ref().unwrap()), bits(&want));
}

#[test]
fn factor_storage_is_balanced() {
    let (spec, a) = problem(32, FieldKind::Constant);
    let out = run_loopback(8, |comm| Ok(factorize_distributed(comm, &a, &spec, 1e-3)?.stored_entries())).unwrap();
    let sizes: Vec<usize> = out.iter().map(|(s, _)| *s).collect();
    let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
    assert!(hi as f64 <= 1.5 * lo as f64, "per-rank entries {sizes:?}");
}

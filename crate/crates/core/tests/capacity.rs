use confcap::capacity::{compact_capacity, point_capacity_decay, Exhaustion};
use confcap::ferrand::{estimate_mu, PathContinuum, SearchConfig};
use confcap::mesh::dist;
use confcap::{build_mesh, solve_condenser, Condenser, ConformalStructure, Domain, DomainSpec, SolverConfig};

fn radial_plane(dim: usize) -> confcap::SimplicialMesh {
    build_mesh(
        &DomainSpec::new(
            Domain::Ball {
                center: vec![0.0; dim],
                radius: 64.0,
            },
            0.4,
        )
        .radial(None)
        .with_shells(&[1.0, 4.0, 16.0]),
    )
    .unwrap()
}

#[test]
fn warm_started_exhaustion_matches_cold_solves() {
    let base = radial_plane(2);
    let k = base.select(|p| dist(p, &[0.0, 0.0]) <= 1.0);
    let family = Exhaustion::new(base, vec![0.0, 0.0], vec![4.0, 16.0, 64.0]).unwrap();
    let config = SolverConfig::default();
    let report = compact_capacity(&family, &ConformalStructure::flat(), &k, &config).unwrap();
    assert!(report.monotone);
    for (i, s) in report.stages.iter().enumerate() {
        let stage = family.stage(i).unwrap();
        let plate1 = stage.map_nodes(&k).unwrap();
        let cold = solve_condenser(
            &stage.mesh,
            &ConformalStructure::flat(),
            &Condenser::new(stage.mesh.boundary_nodes().clone(), plate1).unwrap(),
            &config,
        )
        .unwrap();
        assert!((cold.value - s.result.value).abs() <= 1e-8 * cold.value);
    }
}

#[test]
fn exhaustion_rejects_bad_radii_and_touching_sets() {
    let base = radial_plane(2);
    assert!(Exhaustion::new(base.clone(), vec![0.0, 0.0], vec![16.0, 4.0]).is_err());
    assert!(Exhaustion::new(base.clone(), vec![0.0, 0.0], vec![4.0, 128.0]).is_err());
    let big = base.select(|p| dist(p, &[0.0, 0.0]) <= 4.0);
    let family = Exhaustion::new(base, vec![0.0, 0.0], vec![4.0, 16.0]).unwrap();
    let err = compact_capacity(&family, &ConformalStructure::flat(), &big, &SolverConfig::default()).unwrap_err();
    assert!(err.to_string().contains("boundary"), "{err}");
}

#[test]
fn point_decay_refuses_unresolved_radii() {
    let m = build_mesh(&DomainSpec::new(
        Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        0.1,
    ))
    .unwrap();
    let err = point_capacity_decay(
        &m,
        &ConformalStructure::flat(),
        &[0.0, 0.0],
        &[0.5, 0.01],
        1.0,
        &SolverConfig::default(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("minimum resolvable radius"), "{err}");
}

#[test]
fn mu_is_reproducible_and_symmetric() {
    let m = build_mesh(&DomainSpec::new(
        Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        0.1,
    ))
    .unwrap();
    let (x, y) = (m.nearest_vertex(&[-0.3, 0.1]), m.nearest_vertex(&[0.4, -0.2]));
    let s = ConformalStructure::flat();
    let config = SolverConfig::default();
    let search = SearchConfig { budget: 5, seed: 42 };
    let a = estimate_mu(&m, &s, x, y, &config, &search).unwrap();
    let b = estimate_mu(&m, &s, x, y, &config, &search).unwrap();
    let c = estimate_mu(&m, &s, y, x, &config, &search).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.witness, b.witness);
    assert_eq!(a.value, c.value);
    assert_eq!(a.witness, c.witness.reversed());
    assert!(a.value <= a.search_diagnostics.accepted_values[0]);

    // The witness really has the reported capacity.
    let path = PathContinuum::new(&m, a.witness.nodes().to_vec()).unwrap();
    let direct = solve_condenser(
        &m,
        &s,
        &Condenser::new(m.boundary_nodes().clone(), path.node_set()).unwrap(),
        &config,
    )
    .unwrap();
    assert!((direct.value - a.value).abs() <= 1e-9 * a.value);

    let boundary = m.boundary_nodes().iter().next().unwrap();
    assert!(estimate_mu(&m, &s, boundary, y, &config, &search).is_err());
}

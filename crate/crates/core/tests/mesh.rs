use confcap::mesh::{dist, read_mesh, write_mesh};
use confcap::{build_mesh, Domain, DomainSpec};

fn domains() -> Vec<Domain> {
    vec![
        Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        Domain::Annulus {
            center: vec![0.0, 0.0, 0.0],
            inner: 0.25,
            outer: 1.0,
        },
        Domain::Box {
            min: vec![-1.0, 0.0],
            max: vec![1.0, 0.5],
        },
        Domain::BoxMinusBall {
            min: vec![-1.0, -1.0, -1.0],
            max: vec![1.0, 1.0, 1.0],
            center: vec![0.0, 0.0, 0.0],
            radius: 0.4,
        },
    ]
}

#[test]
fn volumes_converge_under_refinement() {
    for d in domains() {
        let exact = d.exact_volume();
        let h = if d.dim() == 2 { 0.1 } else { 0.25 };
        let coarse = build_mesh(&DomainSpec::new(d.clone(), h)).unwrap();
        let fine = coarse.refine().unwrap();
        let (ec, ef) = (
            (coarse.total_volume() - exact).abs(),
            (fine.total_volume() - exact).abs(),
        );
        assert!(ec <= 0.05 * exact, "{d:?}: {ec}");
        assert!(ef <= ec + 1e-12, "{d:?}: {ef} > {ec}");
        assert!(fine.num_simplices() == coarse.num_simplices() << d.dim());
        assert!(fine.is_connected());
    }
}

#[test]
fn radial_meshes_place_shells_exactly() {
    for dim in [2usize, 3] {
        let shells = [1.0, 4.0, 16.0];
        let spec = DomainSpec::new(
            Domain::Annulus {
                center: vec![0.0; dim],
                inner: 0.25,
                outer: 64.0,
            },
            0.4,
        )
        .radial(None)
        .with_shells(&shells);
        let m = build_mesh(&spec).unwrap();
        let origin = vec![0.0; dim];
        for r in shells {
            let on = m.select(|p| (dist(p, &origin) - r).abs() <= 1e-12 * r);
            assert!(on.len() >= 8, "dim {dim}, shell {r}: {} nodes", on.len());
            let (inner, _) = m.restrict_to_ball(&origin, r).unwrap();
            let outer_boundary: Vec<usize> = inner
                .boundary_nodes()
                .iter()
                .filter(|&i| dist(inner.vertex(i), &origin) > 0.5)
                .collect();
            assert!(outer_boundary.len() >= on.len() / 2);
            for i in outer_boundary {
                assert!((dist(inner.vertex(i), &origin) - r).abs() <= 1e-9 * r);
            }
        }
    }
}

#[test]
fn text_format_round_trips() {
    let m = build_mesh(&DomainSpec::new(domains()[1].clone(), 0.3)).unwrap();
    let m = m.mark_region("core", |p| p[0] > 0.5).unwrap();
    let mut buf = Vec::new();
    write_mesh(&m, &mut buf).unwrap();
    let back = read_mesh(buf.as_slice()).unwrap();
    assert_eq!(back.fingerprint(), m.fingerprint());
    assert_eq!(back.region("core"), m.region("core"));
    assert_eq!(back.coords(), m.coords());
}

#[test]
fn malformed_text_reports_the_line() {
    let err = read_mesh("2 3 1\n0 0\n1 0\n0 oops\n0 1 2\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains('4'), "{err}");
    assert!(read_mesh("2 3 1\n0 0\n1 0\n0 1\n0 1 7\n".as_bytes()).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        DomainSpec::new(domains()[0].clone(), 0.0),
        DomainSpec::new(
            Domain::Annulus {
                center: vec![0.0, 0.0],
                inner: 1.0,
                outer: 0.5,
            },
            0.1,
        ),
        DomainSpec::new(
            Domain::Ball {
                center: vec![0.0; 4],
                radius: 1.0,
            },
            0.5,
        ),
    ];
    for spec in bad {
        assert!(build_mesh(&spec).is_err(), "{spec:?}");
    }
}

use netmo::generator::{self, GenParams};
use netmo::geometry::MeasuredPolyline;
use netmo::motion::{self, GPoint};
use netmo::moql::{self, templates, Context};
use netmo::network::{EdgeInput, Kind, Network, RouteKey, Tolerances};
use netmo::routing;
use netmo::store::Store;

fn ladder() -> Network {
    let line = |wkt: &str, name: &str| EdgeInput {
        curve: MeasuredPolyline::from_wkt(wkt).unwrap(),
        name: name.into(),
        kind: Kind::TwoWay,
    };
    let edges = vec![
        line("LINESTRING(0 0, 300 0)", "South"),
        line("LINESTRING(300 0, 600 0)", "South"),
        line("LINESTRING(0 200, 300 200)", "North"),
        line("LINESTRING(300 200, 600 200)", "North"),
        line("LINESTRING(0 0, 0 200)", "West"),
        line("LINESTRING(300 0, 300 200)", "Middle"),
        line("LINESTRING(600 0, 600 200)", "East"),
    ];
    Network::build(7, &edges, RouteKey::ByName, &[], Tolerances::default()).unwrap()
}

#[test]
fn ladder_routes_and_paths() {
    let net = ladder();
    assert_eq!(net.route_count(), 5);
    assert_eq!(net.node_count(), 6);
    let south = net.routes().find(|r| r.name == "South").unwrap().rid;
    let north = net.routes().find(|r| r.name == "North").unwrap().rid;
    // corner to opposite corner: along one long side and one short side
    let d = routing::network_distance(&net, &GPoint::new(7, south, 0.0, 0), &GPoint::new(7, north, 600.0, 0)).unwrap();
    assert!((d - 800.0).abs() < 1e-9, "{d}");
    // mid-block to mid-block through the middle rung
    let d = routing::network_distance(&net, &GPoint::new(7, south, 250.0, 0), &GPoint::new(7, north, 350.0, 0)).unwrap();
    assert!((d - 300.0).abs() < 1e-9, "{d}");
}

#[test]
fn generate_store_and_query() {
    let net = ladder();
    let mut store = Store::new();
    let params = GenParams {
        periods: 3,
        per_period: 2,
        seed: 5,
        ..GenParams::default()
    };
    let summary = generator::generate(&net, &params, &mut store).unwrap();
    assert_eq!(summary.objects, 6);
    assert_eq!(store.object_count(), 6);
    assert!(store.audit(&net).is_empty());

    let tmp = tempfile::tempdir().unwrap();
    store.save(tmp.path()).unwrap();
    let loaded = Store::load(tmp.path()).unwrap();
    assert_eq!(loaded, store);

    let ctx = Context { net: &net, store: &loaded };
    for moid in loaded.moids() {
        let u = loaded.ugpoint(moid).unwrap();
        let q = format!("size(trajectory(mo({moid})))");
        let v = moql::run(&q, &ctx).unwrap().to_string();
        let expected = motion::size(&motion::trajectory(&u));
        assert!((v.parse::<f64>().unwrap() - expected).abs() < 1e-9);
        let g = templates::visited(&ctx, moid, None).unwrap();
        assert_eq!(g.glid, moid);
    }
    let counted: usize = templates::count_by_route(&ctx, None, 0).iter().map(|r| r.count).sum();
    assert_eq!(counted, 6);
}

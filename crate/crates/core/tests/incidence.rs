use fundom::domains::incidence::net_incidence;
use fundom::voronoi::{Net, Tessellation};
use fundom::{Point, SpaceModel};

#[test]
fn lattice_orbit_of_a_generic_point_is_a_square_grid() {
    let space = SpaceModel::plane();
    let (ox, oy) = (0.31, 0.67);
    let n = 5i32;
    let mut points = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            points.push(Point::plane(ox + i as f64, oy + j as f64));
        }
    }
    let net = Net::new(&space, points).unwrap();
    let graph = net_incidence(&Tessellation::new(&space, &net), 1.5, 24, 5);
    let side = (2 * n + 1) as usize;
    let at = |i: i32, j: i32| ((i + n) as usize) * side + (j + n) as usize;
    for i in -n + 1..n {
        for j in -n + 1..n {
            let v = at(i, j);
            assert_eq!(graph.degree(v), 4, "vertex ({i}, {j})");
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                assert!(graph.has_edge(v, at(i + di, j + dj)));
            }
            // Diagonal tiles meet only at a corner shared by four tiles.
            assert!(!graph.has_edge(v, at(i + 1, j + 1)));
        }
    }
}

#[test]
fn hexagonal_lattice_tiles_have_six_neighbours() {
    let space = SpaceModel::plane();
    let (a, b) = ([1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]);
    let n = 4i32;
    let mut points = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let (i, j) = (i as f64, j as f64);
            points.push(Point::plane(0.2 + i * a[0] + j * b[0], 0.1 + i * a[1] + j * b[1]));
        }
    }
    let net = Net::new(&space, points).unwrap();
    let graph = net_incidence(&Tessellation::new(&space, &net), 1.5, 24, 9);
    let side = (2 * n + 1) as usize;
    let center = (n as usize) * side + n as usize;
    assert_eq!(graph.degree(center), 6);
}

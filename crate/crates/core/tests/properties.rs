use proptest::prelude::*;
use ridcov::geometry::{polyline_length, segment_union_length, Disk, Point2};
use ridcov::hybrid::{decompose_trajectory, pack_region};

fn point(lim: f64) -> impl Strategy<Value = Point2> {
    (-lim..lim, -lim..lim).prop_map(|(x, y)| Point2::new(x, y))
}

fn disk() -> impl Strategy<Value = Disk> {
    (point(100.0), 0.1..60.0f64).prop_map(|(c, r)| Disk::new(c, r).unwrap())
}

proptest! {
    #[test]
    fn union_length_is_bounded_and_monotone(a in point(100.0), b in point(100.0), disks in prop::collection::vec(disk(), 0..8), extra in disk()) {
        let seg = a.distance(b);
        let u = segment_union_length(a, b, &disks);
        prop_assert!(u >= 0.0 && u <= seg * (1.0 + 1e-12));
        let mut more = disks.clone();
        more.push(extra);
        prop_assert!(segment_union_length(a, b, &more) >= u - 1e-9);
    }

    #[test]
    fn union_length_is_at_least_the_largest_single_disk(a in point(100.0), b in point(100.0), disks in prop::collection::vec(disk(), 1..8)) {
        let u = segment_union_length(a, b, &disks);
        let best = disks.iter().map(|d| segment_union_length(a, b, std::slice::from_ref(d))).fold(0.0, f64::max);
        prop_assert!(u >= best - 1e-9);
    }

    #[test]
    fn decomposition_conserves_length(pts in prop::collection::vec(point(3000.0), 2..10)) {
        prop_assume!(polyline_length(&pts) > 0.0);
        let region = [
            Point2::new(-3000.0, -3000.0),
            Point2::new(3000.0, -3000.0),
            Point2::new(3000.0, 3000.0),
            Point2::new(-3000.0, 3000.0),
        ];
        let packing = pack_region(&region, 700.0, 300.0).unwrap();
        let d = decompose_trajectory(&pts, &packing).unwrap();
        prop_assert!((d.piece_length() + d.residual_length - d.total_length).abs() <= 1e-9 * d.total_length);
    }
}

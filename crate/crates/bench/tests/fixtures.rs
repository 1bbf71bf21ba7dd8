use dynseg_bench::{disc_image, grid_network, motion_rows, scene};

#[test]
fn fixtures_are_well_formed_and_repeatable() {
    let rows = motion_rows(1000);
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows, motion_rows(1000));
    assert_eq!(rows.iter().filter(|r| r[1] > 10.0).count(), 200);

    let net = grid_network(10, 7);
    assert_eq!(net.node_count(), 70);
    assert_eq!(net.edges.len(), 9 * 7 + 10 * 6);

    let (img, b) = disc_image();
    assert!(img.get(60, 50)[0] > 200);
    assert!(b.contains([30.0, 50.0]) && b.contains([90.0, 50.0]));

    let s = scene(160, 120, 3);
    assert_eq!(s.gt.len(), 1);
    assert_eq!(s, scene(160, 120, 3));
}

use domsim::arena::{benchmark_kingdom, benchmark_table};
use domsim::bots::{preset, Policy};

#[test]
fn mirror_rows_name_the_second_seat() {
    let p = preset("provincial-preset").unwrap();
    let bm = preset("big-money").unwrap();
    let table = benchmark_table(&[&p as &dyn Policy], &[&p as &dyn Policy, &bm], 40, benchmark_kingdom(), 1).unwrap();
    assert_eq!(table.rows[0].candidate, "provincial-preset (second seat)");
    assert_eq!(table.rows[1].candidate, "provincial-preset");
    for row in &table.rows {
        assert_eq!(row.wins + row.ties + row.losses + row.aborted, 40);
    }
}

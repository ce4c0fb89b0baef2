use dikernel::IntervalPartition;
use proptest::prelude::{prop_assert, proptest};

fn p(b: &[f64]) -> IntervalPartition {
    IntervalPartition::new(b.to_vec()).unwrap()
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

#[test]
fn uniform_breakpoints() {
    let u3 = IntervalPartition::uniform(3).unwrap();
    assert!(close(u3.breakpoints(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]));
    assert_eq!(IntervalPartition::uniform(1).unwrap().breakpoints(), &[0.0, 1.0]);
    assert!(close(IntervalPartition::uniform(4).unwrap().breakpoints(), &[0.0, 0.25, 0.5, 0.75, 1.0]));
    assert!(IntervalPartition::uniform(0).is_err());
}

#[test]
fn weights_are_cell_lengths() {
    assert!(close(&p(&[0.0, 1.0 / 6.0, 0.5, 1.0]).weights(), &[1.0 / 6.0, 1.0 / 3.0, 0.5]));
    assert!(close(&IntervalPartition::uniform(3).unwrap().weights(), &[1.0 / 3.0; 3]));
    assert_eq!(p(&[0.0, 1.0]).weights(), vec![1.0]);
}

#[test]
fn locate_uses_half_open_cells() {
    let v = p(&[0.0, 1.0 / 6.0, 0.5, 1.0]);
    assert_eq!(v.locate(0.25).unwrap(), 1);
    assert_eq!(v.locate(1.0).unwrap(), 2);
    assert_eq!(IntervalPartition::uniform(3).unwrap().locate(1.0 / 3.0).unwrap(), 1);
    assert!(v.locate(-0.1).is_err());
    assert!(v.locate(1.1).is_err());
}

#[test]
fn common_refinement_is_the_union() {
    assert!(close(
        p(&[0.0, 0.5, 1.0]).common_refinement(&p(&[0.0, 0.25, 1.0])).breakpoints(),
        &[0.0, 0.25, 0.5, 1.0]
    ));
    let v = p(&[0.0, 0.3, 1.0]);
    assert!(v.common_refinement(&v).same_as(&v));
    let u = IntervalPartition::uniform(2).unwrap().common_refinement(&IntervalPartition::uniform(3).unwrap());
    assert!(close(u.breakpoints(), &[0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0]));
}

#[test]
fn invalid_breakpoints_are_rejected() {
    assert!(IntervalPartition::new(vec![0.1, 1.0]).is_err());
    assert!(IntervalPartition::new(vec![0.0, 0.9]).is_err());
    assert!(IntervalPartition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    assert!(IntervalPartition::new(vec![0.0, 0.6, 0.4, 1.0]).is_err());
}

#[test]
fn json_shape() {
    let v: IntervalPartition = serde_json::from_str(r#"{"breakpoints":[0,0.25,1]}"#).unwrap();
    assert!(close(&v.weights(), &[0.25, 0.75]));
    assert!(serde_json::from_str::<IntervalPartition>(r#"{"breakpoints":[0,1.5]}"#).is_err());
}

proptest! {
    #[test]
    fn partition_properties(cuts in proptest::collection::vec(0.001f64..0.999, 0..8),
                            other in proptest::collection::vec(0.001f64..0.999, 0..8),
                            x in 0.0f64..=1.0) {
        let build = |c: &[f64]| {
            let mut b = c.to_vec();
            b.push(0.0);
            b.push(1.0);
            b.sort_by(|a, b| a.total_cmp(b));
            b.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            IntervalPartition::new(b).unwrap()
        };
        let (a, b) = (build(&cuts), build(&other));
        prop_assert!((a.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let j = a.locate(x).unwrap();
        prop_assert!(a.breakpoints()[j] <= x);
        prop_assert!(x < a.breakpoints()[j + 1] || (j + 1 == a.len() && x <= 1.0));
        let r = a.common_refinement(&b);
        prop_assert!(r.refines(&a) && r.refines(&b));
    }
}

//! Instance selection for one data unit crossing a connection.

use super::{GraphError, GroupingSpec};
use crate::hash::{projection_bytes, stable_hash};
use serde_json::Value;

/// Picks the destination instance for `payload` on a connection routed by
/// `spec`.
///
/// Shuffle routes round-robin per sender (`sender_counter` is that sender's
/// running send count on this connection). Group-by hashes the canonical
/// encoding of the projected tuple elements, so equal projections always
/// pick the same instance regardless of sender or process.
///
/// A non-sequence payload is treated as a one-element tuple, letting
/// `GroupBy([0])` group a scalar stream by value.
pub fn route(
    spec: &GroupingSpec,
    payload: &Value,
    sender_counter: u64,
    n_instances: usize,
) -> Result<usize, GraphError> {
    assert!(n_instances >= 1, "route requires at least one instance");
    match spec {
        GroupingSpec::Shuffle => Ok((sender_counter % n_instances as u64) as usize),
        GroupingSpec::GroupBy(indices) => {
            let single = std::slice::from_ref(payload);
            let elements: &[Value] = match payload.as_array() {
                Some(items) => items.as_slice(),
                None => single,
            };
            let mut projected = Vec::with_capacity(indices.len());
            for &index in indices {
                let element = elements
                    .get(index)
                    .ok_or(GraphError::IndexOutOfRange { index, len: elements.len() })?;
                projected.push(element);
            }
            let bytes = projection_bytes(projected);
            Ok((stable_hash(&bytes) % n_instances as u64) as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn group_by_key_locality() {
        let spec = GroupingSpec::group_by(vec![0]);
        let a = route(&spec, &json!(["the", 1]), 0, 4).unwrap();
        let b = route(&spec, &json!(["the", 7]), 99, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffle_is_counter_mod_instances() {
        assert_eq!(route(&GroupingSpec::Shuffle, &json!(0), 5, 2).unwrap(), 1);
    }

    #[test]
    fn single_instance_always_zero() {
        let spec = GroupingSpec::group_by(vec![0]);
        assert_eq!(route(&spec, &json!(["word", 1]), 0, 1).unwrap(), 0);
    }

    #[test]
    fn index_beyond_payload_length() {
        let spec = GroupingSpec::group_by(vec![3]);
        assert_eq!(
            route(&spec, &json!(["word", 1]), 0, 4),
            Err(GraphError::IndexOutOfRange { index: 3, len: 2 })
        );
    }

    #[test]
    fn scalar_payload_acts_as_singleton_tuple() {
        let spec = GroupingSpec::group_by(vec![0]);
        let a = route(&spec, &json!("alpha"), 0, 8).unwrap();
        let b = route(&spec, &json!("alpha"), 3, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            route(&spec, &json!("alpha"), 0, 8),
            route(&spec, &json!(["alpha"]), 0, 8)
        );
    }

    proptest! {
        // Equal projections route identically for every instance count.
        #[test]
        fn group_by_locality_holds(
            key in "[a-z]{1,8}",
            a in 0i64..1000,
            b in 0i64..1000,
            n in 1usize..16,
        ) {
            let spec = GroupingSpec::group_by(vec![0]);
            let lhs = route(&spec, &json!([key.clone(), a]), 0, n).unwrap();
            let rhs = route(&spec, &json!([key, b]), 7, n).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        // k*n consecutive sends from one sender hit each instance exactly k times.
        #[test]
        fn shuffle_fairness(n in 1usize..8, k in 1u64..5) {
            let mut hits = vec![0u64; n];
            for counter in 0..(k * n as u64) {
                let idx = route(&GroupingSpec::Shuffle, &json!(counter), counter, n).unwrap();
                hits[idx] += 1;
            }
            prop_assert!(hits.iter().all(|&h| h == k));
        }

        // Routing never exceeds the instance range.
        #[test]
        fn route_in_range(counter in 0u64..10_000, n in 1usize..32) {
            let idx = route(&GroupingSpec::Shuffle, &json!(0), counter, n).unwrap();
            prop_assert!(idx < n);
            let idx = route(&GroupingSpec::group_by(vec![0]), &json!([counter]), counter, n).unwrap();
            prop_assert!(idx < n);
        }
    }
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{DirectedPair, InteractionRegistry, Label, PairError, GENERATED_NEGATIVE};
use crate::rng::SeededRng;

/// Which known pairs block a candidate negative `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockingPolicy {
    /// Blocked if `(a, b)` or `(b, a)` is known.
    #[default]
    BothOrientations,
    /// Blocked only if `(a, b)` itself is known.
    SameOrientation,
}

impl BlockingPolicy {
    fn blocks(self, registry: &InteractionRegistry, a: u32, b: u32) -> bool {
        registry.contains_ix(a, b)
            || (self == BlockingPolicy::BothOrientations && registry.contains_ix(b, a))
    }

    fn blocked_count(self, registry: &InteractionRegistry) -> usize {
        let known = registry.known_ix();
        match self {
            BlockingPolicy::SameOrientation => known.len(),
            BlockingPolicy::BothOrientations => {
                let symmetric = known.iter().filter(|&&(a, b)| known.contains(&(b, a))).count();
                2 * known.len() - symmetric
            }
        }
    }
}

/// Samples `n` distinct ordered non-self pairs that no known interaction
/// blocks. Output order is the sampling order and depends only on the
/// registry contents, `n`, `seed` and `policy`.
///
/// Uses rejection sampling when the free candidate space is at least `4n`,
/// and a seeded shuffle of the fully enumerated free space otherwise.
pub fn generate_negatives(
    n: usize,
    registry: &InteractionRegistry,
    seed: u64,
    policy: BlockingPolicy,
) -> Result<Vec<DirectedPair>, PairError> {
    let universe = registry.universe();
    let drugs = universe.len() as u64;
    let ordered = drugs * drugs.saturating_sub(1);
    let free = ordered - policy.blocked_count(registry) as u64;
    if (n as u64) > free {
        return Err(PairError::InsufficientCandidates {
            requested: n,
            max: free as usize,
        });
    }
    let mut rng = SeededRng::derive(seed, "negatives");
    let mut picked: Vec<(u32, u32)> = Vec::with_capacity(n);

    if free < 4 * n as u64 {
        let mut candidates = Vec::with_capacity(free as usize);
        for a in 0..drugs as u32 {
            for b in 0..drugs as u32 {
                if a != b && !policy.blocks(registry, a, b) {
                    candidates.push((a, b));
                }
            }
        }
        rng.shuffle(&mut candidates);
        candidates.truncate(n);
        picked = candidates;
    } else {
        let mut seen = HashSet::with_capacity(n);
        while picked.len() < n {
            let a = rng.below(drugs) as u32;
            let mut b = rng.below(drugs - 1) as u32;
            if b >= a {
                b += 1;
            }
            if policy.blocks(registry, a, b) || !seen.insert((a, b)) {
                continue;
            }
            picked.push((a, b));
        }
    }

    Ok(picked
        .into_iter()
        .map(|(a, b)| {
            DirectedPair::new(
                universe.id(a),
                universe.id(b),
                Label::NoInteraction,
                GENERATED_NEGATIVE,
            )
        })
        .collect())
}

/// Cuts consecutive, disjoint slices of `pool` with the requested sizes.
pub fn allot_negatives<'a>(
    pool: &'a [DirectedPair],
    sizes: &[usize],
) -> Result<Vec<&'a [DirectedPair]>, PairError> {
    let total: usize = sizes.iter().sum();
    if total > pool.len() {
        return Err(PairError::InsufficientNegatives {
            shortfall: total - pool.len(),
        });
    }
    let mut rest = pool;
    Ok(sizes
        .iter()
        .map(|&k| {
            let (head, tail) = rest.split_at(k);
            rest = tail;
            head
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::tests::catalog_with;

    fn registry(n: usize, known: &[(usize, usize)]) -> InteractionRegistry {
        let mut r = InteractionRegistry::new(&catalog_with(n));
        let pairs: Vec<_> = known
            .iter()
            .map(|&(a, b)| {
                DirectedPair::new(&format!("D{a:03}"), &format!("D{b:03}"), Label::Interaction, "t")
            })
            .collect();
        r.register_known(&pairs).unwrap();
        r
    }

    #[test]
    fn exhausted_space_is_an_error() {
        let r = registry(2, &[(0, 1)]);
        match generate_negatives(1, &r, 1, BlockingPolicy::BothOrientations) {
            Err(PairError::InsufficientCandidates { requested, max }) => {
                assert_eq!((requested, max), (1, 0));
            }
            other => panic!("unexpected {other:?}"),
        }
        // Same-orientation policy leaves (B, A) free.
        let got = generate_negatives(1, &r, 1, BlockingPolicy::SameOrientation).unwrap();
        assert_eq!((got[0].drug1.as_str(), got[0].drug2.as_str()), ("D001", "D000"));
    }

    #[test]
    fn three_drugs_fill_the_free_space() {
        let r = registry(3, &[(0, 1), (1, 0)]);
        let got = generate_negatives(4, &r, 9, BlockingPolicy::BothOrientations).unwrap();
        let mut set: Vec<_> = got.iter().map(|p| (p.drug1.clone(), p.drug2.clone())).collect();
        set.sort();
        let want: Vec<(String, String)> = [("D000", "D002"), ("D001", "D002"), ("D002", "D000"), ("D002", "D001")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(set, want);
        assert!(got.iter().all(|p| p.label == Some(Label::NoInteraction) && p.source == GENERATED_NEGATIVE));
    }

    #[test]
    fn same_seed_same_output() {
        let r = registry(30, &[(0, 1), (2, 3), (4, 5)]);
        let a = generate_negatives(50, &r, 42, BlockingPolicy::BothOrientations).unwrap();
        let b = generate_negatives(50, &r, 42, BlockingPolicy::BothOrientations).unwrap();
        let c = generate_negatives(50, &r, 43, BlockingPolicy::BothOrientations).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn allotment_is_consecutive() {
        let r = registry(10, &[]);
        let pool = generate_negatives(10, &r, 1, BlockingPolicy::BothOrientations).unwrap();
        let parts = allot_negatives(&pool, &[3, 0, 5]).unwrap();
        assert_eq!(parts[0], &pool[..3]);
        assert!(parts[1].is_empty());
        assert_eq!(parts[2], &pool[3..8]);
        assert!(matches!(
            allot_negatives(&pool, &[8, 5]),
            Err(PairError::InsufficientNegatives { shortfall: 3 })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn no_dupes_self_pairs_or_blocked(
                seed in any::<u64>(),
                drugs in 3usize..25,
                known in proptest::collection::vec((0usize..25, 0usize..25), 0..40),
                frac in 0.05f64..1.0,
                same in any::<bool>(),
            ) {
                let known: Vec<_> = known.into_iter()
                    .filter(|&(a, b)| a < drugs && b < drugs && a != b)
                    .collect();
                let r = registry(drugs, &known);
                let policy = if same { BlockingPolicy::SameOrientation } else { BlockingPolicy::BothOrientations };
                let free = policy.blocked_count(&r);
                let free = drugs * (drugs - 1) - free;
                let n = ((free as f64) * frac) as usize;
                let got = generate_negatives(n, &r, seed, policy).unwrap();
                prop_assert_eq!(got.len(), n);
                let mut seen = HashSet::new();
                for p in &got {
                    prop_assert_ne!(&p.drug1, &p.drug2);
                    prop_assert!(seen.insert((p.drug1.clone(), p.drug2.clone())));
                    prop_assert!(!r.contains(&p.drug1, &p.drug2));
                    if !same {
                        prop_assert!(!r.contains(&p.drug2, &p.drug1));
                    }
                }
                prop_assert!(generate_negatives(free + 1, &r, seed, policy).is_err());
            }
        }
    }
}

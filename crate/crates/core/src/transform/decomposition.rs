use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Radices a decomposition step may split off.
pub const RADIX_MENU: [usize; 3] = [2, 4, 8];

/// Sizes handled by straight-line codelets.
pub const BASE_CASES: [usize; 3] = [2, 4, 8];

/// A Cooley-Tukey breakdown of a power-of-two transform.
///
/// `splits` lists the radices from the root of the recursion downwards; the
/// block left after the last split is handled by a `base` codelet. A radix
/// `r` step runs `log2 r` butterfly stages over the whole block and then
/// recurses into `r` sub-blocks. The size-1 transform is the only one with
/// `base == 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decomposition {
    splits: Vec<usize>,
    base: usize,
}

impl Decomposition {
    pub fn new(splits: Vec<usize>, base: usize) -> Result<Self> {
        if let Some(r) = splits.iter().find(|r| !RADIX_MENU.contains(r)) {
            return Err(Error::invalid(format!(
                "radix {r} is not one of {RADIX_MENU:?}"
            )));
        }
        let base_ok = BASE_CASES.contains(&base) || (base == 1 && splits.is_empty());
        if !base_ok {
            return Err(Error::invalid(format!(
                "base case {base} is not one of {BASE_CASES:?}"
            )));
        }
        Ok(Decomposition { splits, base })
    }

    /// Plain codelet, no splits. `n` must be 1, 2, 4 or 8.
    pub fn base_only(n: usize) -> Result<Self> {
        Self::new(Vec::new(), n)
    }

    pub fn splits(&self) -> &[usize] {
        &self.splits
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Transform size the decomposition reconstructs.
    pub fn size(&self) -> usize {
        self.splits.iter().product::<usize>() * self.base
    }

    /// Radices from the root down, with the base case last.
    pub fn path(&self) -> Vec<usize> {
        let mut p = self.splits.clone();
        p.push(self.base);
        p
    }

    pub(crate) fn from_path(path: &[usize]) -> Self {
        let (base, splits) = path.split_last().expect("non-empty path");
        Decomposition {
            splits: splits.to_vec(),
            base: *base,
        }
    }

    /// Same base case, splits in reverse order.
    pub fn reversed(&self) -> Self {
        let mut splits = self.splits.clone();
        splits.reverse();
        Decomposition {
            splits,
            base: self.base,
        }
    }

    /// The built-in breakdown used when no plan is supplied: radix-8 steps
    /// over a size-8 codelet, with one leading radix-2 or radix-4 step when
    /// `log2 n` is not a multiple of three.
    pub fn default_for(n: usize) -> Self {
        assert!(n.is_power_of_two(), "transform size must be a power of two");
        let k = n.trailing_zeros() as usize;
        if k <= 3 {
            return Decomposition {
                splits: Vec::new(),
                base: n,
            };
        }
        let rest = k - 3;
        let mut splits = Vec::new();
        if !rest.is_multiple_of(3) {
            splits.push(1 << (rest % 3));
        }
        splits.extend(std::iter::repeat_n(8, rest / 3));
        Decomposition { splits, base: 8 }
    }

    /// Adapts the decomposition to another power-of-two size.
    ///
    /// Shrinking keeps the longest tail of the path that fits and covers the
    /// remaining factor with one extra root radix; growing prepends radix-8
    /// steps (and one smaller step for the remainder). Sub-blocks of a planned
    /// transform therefore inherit the planned shape.
    pub fn for_size(&self, n: usize) -> Self {
        assert!(n.is_power_of_two(), "transform size must be a power of two");
        let path = self.path();
        let size = self.size();
        if n >= size {
            let mut extra = n / size;
            let mut head = Vec::new();
            let lead = extra.trailing_zeros() % 3;
            if lead != 0 {
                head.push(1 << lead);
                extra >>= lead;
            }
            while extra > 1 {
                head.push(8);
                extra /= 8;
            }
            if path == [1] {
                // grow from the trivial transform: last step becomes the base
                return match head.split_last() {
                    Some((&b, s)) => Decomposition {
                        splits: s.to_vec(),
                        base: b,
                    },
                    None => self.clone(),
                };
            }
            head.extend(path);
            return Self::from_path(&head);
        }
        let mut prod = 1;
        let mut start = path.len();
        while start > 0 && prod * path[start - 1] <= n {
            start -= 1;
            prod *= path[start];
        }
        let mut out = Vec::with_capacity(path.len() - start + 1);
        if n / prod > 1 {
            out.push(n / prod);
        }
        out.extend_from_slice(&path[start..]);
        if out.is_empty() {
            out.push(1);
        }
        Self::from_path(&out)
    }

    /// Every decomposition of `n` over the radix menu and base cases, in
    /// tie-break order.
    pub fn all_for(n: usize) -> Vec<Self> {
        assert!(n.is_power_of_two(), "transform size must be a power of two");
        if n == 1 {
            return vec![Decomposition {
                splits: Vec::new(),
                base: 1,
            }];
        }
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        enumerate(n, &mut prefix, &mut out);
        out.sort();
        out
    }
}

fn enumerate(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Decomposition>) {
    if BASE_CASES.contains(&n) {
        out.push(Decomposition {
            splits: prefix.clone(),
            base: n,
        });
    }
    for &r in &RADIX_MENU {
        if n > r && n.is_multiple_of(r) {
            prefix.push(r);
            enumerate(n / r, prefix, out);
            prefix.pop();
        }
    }
}

/// Smallest radix first: paths compare lexicographically, so `[2, 4]` beats
/// `[4, 2]` which beats `[8]`.
impl Ord for Decomposition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.path().cmp(&other.path())
    }
}

impl PartialOrd for Decomposition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.splits {
            write!(f, "{r}x")?;
        }
        write!(f, "[{}]", self.base)
    }
}

//! Target plus source domains expressed over one shared entity axis.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::matrix::{transpose, IdMap, RatingsMatrix};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    SharedUsers,
    SharedItems,
}

/// One target and `N ≥ 0` source matrices whose shared axis (users or items)
/// uses a single dense index space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCollection<F: Scalar> {
    pub target: RatingsMatrix<F>,
    pub sources: Vec<RatingsMatrix<F>>,
    pub orientation: Orientation,
}

impl<F: Scalar> AlignedCollection<F> {
    /// Builds a collection from matrices that are already aligned.
    pub fn from_aligned(target: RatingsMatrix<F>, sources: Vec<RatingsMatrix<F>>, orientation: Orientation) -> Result<Self> {
        let size = shared_size(&target, orientation);
        for (k, s) in sources.iter().enumerate() {
            if shared_size(s, orientation) != size {
                return invalid(format!("source {k} shared axis has {} entries, target has {size}", shared_size(s, orientation)));
            }
        }
        Ok(Self { target, sources, orientation })
    }

    pub fn single(target: RatingsMatrix<F>) -> Self {
        Self { target, sources: Vec::new(), orientation: Orientation::SharedUsers }
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn shared_axis_size(&self) -> usize {
        shared_size(&self.target, self.orientation)
    }

    /// Domain `0` is the target, `1..=N` the sources.
    pub fn domain(&self, l: usize) -> &RatingsMatrix<F> {
        if l == 0 {
            &self.target
        } else {
            &self.sources[l - 1]
        }
    }

    pub fn domains(&self) -> impl Iterator<Item = &RatingsMatrix<F>> {
        std::iter::once(&self.target).chain(self.sources.iter())
    }

    pub fn n_domains(&self) -> usize {
        self.sources.len() + 1
    }

    /// The same problem with users on the shared axis; shared-items
    /// collections are transposed.
    pub fn shared_users_view(&self) -> Cow<'_, Self> {
        match self.orientation {
            Orientation::SharedUsers => Cow::Borrowed(self),
            Orientation::SharedItems => Cow::Owned(Self {
                target: transpose(&self.target),
                sources: self.sources.iter().map(transpose).collect(),
                orientation: Orientation::SharedUsers,
            }),
        }
    }

    /// Collection with only the target and source `k`.
    pub fn with_single_source(&self, k: usize) -> Self {
        Self { target: self.target.clone(), sources: vec![self.sources[k].clone()], orientation: self.orientation }
    }

    pub fn with_target(&self, target: RatingsMatrix<F>) -> Self {
        Self { target, sources: self.sources.clone(), orientation: self.orientation }
    }
}

fn shared_size<F: Scalar>(m: &RatingsMatrix<F>, o: Orientation) -> usize {
    match o {
        Orientation::SharedUsers => m.n_users(),
        Orientation::SharedItems => m.n_items(),
    }
}

/// Re-indexes every domain into the union of its shared-axis ids, in
/// first-appearance order over target then sources. The other axis keeps
/// each domain's own index space.
pub fn align_domains<F: Scalar>(target: &RatingsMatrix<F>, sources: &[RatingsMatrix<F>], orientation: Orientation) -> AlignedCollection<F> {
    let shared_ids = |m: &RatingsMatrix<F>| -> IdMap {
        match orientation {
            Orientation::SharedUsers => m.user_ids().clone(),
            Orientation::SharedItems => m.item_ids().clone(),
        }
    };
    let mut union = IdMap::new();
    for m in std::iter::once(target).chain(sources) {
        for id in shared_ids(m).ids() {
            union.get_or_insert(id);
        }
    }
    let realign = |m: &RatingsMatrix<F>| -> RatingsMatrix<F> {
        let own = shared_ids(m);
        let map: Vec<usize> = own.ids().iter().map(|id| union.get(id).expect("id in union")).collect();
        match orientation {
            Orientation::SharedUsers => {
                let ident: Vec<usize> = (0..m.n_items()).collect();
                m.reindex(union.clone(), &map, m.item_ids().clone(), &ident)
            }
            Orientation::SharedItems => {
                let ident: Vec<usize> = (0..m.n_users()).collect();
                m.reindex(m.user_ids().clone(), &ident, union.clone(), &map)
            }
        }
    };
    AlignedCollection { target: realign(target), sources: sources.iter().map(realign).collect(), orientation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::io::parse_ratings_str;
    use crate::data::RatingBounds;

    fn parse(s: &str) -> RatingsMatrix<f64> {
        parse_ratings_str(s, RatingBounds::default()).unwrap()
    }

    fn entry_set(m: &RatingsMatrix<f64>) -> Vec<(String, String, u64)> {
        let mut v: Vec<_> =
            m.triples().map(|t| (m.user_ids().id(t.user).to_string(), m.item_ids().id(t.item).to_string(), t.rating.to_bits())).collect();
        v.sort();
        v
    }

    #[test]
    fn shared_users_union() {
        let t = parse("a,x,1\nb,y,2");
        let s = parse("b,p,3\nc,q,4");
        let col = align_domains(&t, std::slice::from_ref(&s), Orientation::SharedUsers);
        assert_eq!(col.shared_axis_size(), 3);
        assert_eq!(col.sources[0].n_users(), 3);
        assert_eq!(col.sources[0].user_ids().get("c"), Some(2));
        assert_eq!(entry_set(&col.sources[0]), entry_set(&s));
        assert_eq!(entry_set(&col.target), entry_set(&t));
    }

    #[test]
    fn no_sources_is_identity() {
        let t = parse("a,x,1\nb,y,2\nc,x,3");
        let col = align_domains(&t, &[], Orientation::SharedUsers);
        assert_eq!(col.n_sources(), 0);
        assert_eq!(col.shared_axis_size(), t.n_users());
        assert_eq!(col.target, t);
    }

    #[test]
    fn shared_items_identical_sets() {
        let ids: Vec<String> = (0..7).map(|i| format!("m{i}")).collect();
        let t = parse(&ids.iter().map(|i| format!("u1,{i},3")).collect::<Vec<_>>().join("\n"));
        let s = parse(&ids.iter().rev().map(|i| format!("v9,{i},2")).collect::<Vec<_>>().join("\n"));
        let col = align_domains(&t, &[s], Orientation::SharedItems);
        assert_eq!(col.shared_axis_size(), 7);
        let view = col.shared_users_view();
        assert_eq!(view.orientation, Orientation::SharedUsers);
        assert_eq!(view.target.n_users(), 7);
        assert_eq!(view.sources[0].n_users(), 7);
    }
}

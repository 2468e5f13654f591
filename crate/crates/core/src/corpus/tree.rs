//! Reply trees and their root-to-leaf linearization.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::labels::{DialogActLabel, SentimentLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPost {
    pub post_id: String,
    pub reply_to: Option<String>,
    pub tokens: Vec<String>,
    pub sentiment: Option<SentimentLabel>,
    pub dialog_act: Option<DialogActLabel>,
    /// The annotators discarded this post's dialog act (codes U, Z, `*`).
    /// Removed posts stay in the tree but are skipped by [`linearize`].
    #[serde(default)]
    pub removed: bool,
}

impl LabeledPost {
    pub fn new(
        post_id: impl Into<String>,
        reply_to: Option<&str>,
        text: &str,
        sentiment: Option<SentimentLabel>,
        dialog_act: Option<DialogActLabel>,
    ) -> Self {
        Self {
            post_id: post_id.into(),
            reply_to: reply_to.map(str::to_owned),
            tokens: text.split_whitespace().map(str::to_owned).collect(),
            sentiment,
            dialog_act,
            removed: false,
        }
    }
}

/// A reply tree: exactly one root, every other post replies to a post in the tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogTree {
    pub id: String,
    posts: Vec<LabeledPost>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    root: usize,
}

impl DialogTree {
    /// Builds a tree from posts in input order. Sibling order follows input order.
    pub fn from_posts(id: impl Into<String>, posts: Vec<LabeledPost>) -> Result<Self> {
        let id = id.into();
        if posts.is_empty() {
            return Err(Error::Structure(format!("tree {id} has no posts")));
        }
        let mut index = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            if p.tokens.is_empty() {
                return Err(Error::Validation(format!("post {} has no tokens", p.post_id)));
            }
            if index.insert(p.post_id.clone(), i).is_some() {
                return Err(Error::Structure(format!("duplicate post id {}", p.post_id)));
            }
        }
        let mut children = vec![Vec::new(); posts.len()];
        let mut roots = Vec::new();
        for (i, p) in posts.iter().enumerate() {
            match &p.reply_to {
                None => roots.push(i),
                Some(parent) => {
                    let &j = index.get(parent).ok_or_else(|| {
                        Error::Structure(format!("dangling reply_to {parent} (post {})", p.post_id))
                    })?;
                    children[j].push(i);
                }
            }
        }
        if let Some(cycle) = find_cycle(&posts, &index) {
            return Err(Error::Structure(format!("reply cycle {}", cycle.join(" -> "))));
        }
        let root = match roots.as_slice() {
            [r] => *r,
            [] => unreachable!("acyclic non-empty forest has a root"),
            _ => {
                return Err(Error::Structure(format!(
                    "tree {id} has {} roots ({})",
                    roots.len(),
                    roots.iter().map(|&r| posts[r].post_id.as_str()).collect::<Vec<_>>().join(", ")
                )))
            }
        };
        Ok(Self {
            id,
            posts,
            index,
            children,
            root,
        })
    }

    pub fn root(&self) -> &LabeledPost {
        &self.posts[self.root]
    }

    pub fn posts(&self) -> &[LabeledPost] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn get(&self, post_id: &str) -> Option<&LabeledPost> {
        self.index.get(post_id).map(|&i| &self.posts[i])
    }

    pub fn children(&self, post_id: &str) -> impl Iterator<Item = &LabeledPost> {
        let kids = self.index.get(post_id).map(|&i| self.children[i].as_slice()).unwrap_or(&[]);
        kids.iter().map(|&c| &self.posts[c])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &LabeledPost> {
        self.children
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_empty())
            .map(|(i, _)| &self.posts[i])
    }

    /// Root-to-leaf index paths, depth first, siblings in input order.
    fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        let mut path: Vec<usize> = Vec::new();
        while let Some((node, depth)) = stack.pop() {
            path.truncate(depth);
            path.push(node);
            let kids = &self.children[node];
            if kids.is_empty() {
                out.push(path.clone());
            }
            for &k in kids.iter().rev() {
                stack.push((k, depth + 1));
            }
        }
        out
    }
}

fn find_cycle(posts: &[LabeledPost], index: &HashMap<String, usize>) -> Option<Vec<String>> {
    // 0 = unvisited, 1 = on current walk, 2 = known to reach a root
    let mut state = vec![0u8; posts.len()];
    for start in 0..posts.len() {
        let mut walk: Vec<usize> = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            match state[i] {
                2 => break,
                1 => {
                    let pos = walk.iter().position(|&w| w == i).unwrap();
                    let mut ids: Vec<String> =
                        walk[pos..].iter().map(|&w| posts[w].post_id.clone()).collect();
                    ids.push(posts[i].post_id.clone());
                    return Some(ids);
                }
                _ => {}
            }
            state[i] = 1;
            walk.push(i);
            cur = posts[i].reply_to.as_ref().and_then(|p| index.get(p).copied());
        }
        for w in walk {
            state[w] = 2;
        }
    }
    None
}

/// One branch of a reply tree, root first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearDialog {
    pub id: String,
    pub source_tree_id: String,
    pub leaf_id: String,
    pub posts: Vec<LabeledPost>,
}

impl LinearDialog {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn post_ids(&self) -> impl Iterator<Item = &str> {
        self.posts.iter().map(|p| p.post_id.as_str())
    }
}

/// Expands a tree into one dialog per leaf.
///
/// Posts whose dialog act was removed are dropped and the branch is re-chained
/// across the gap; a branch left with no posts is omitted.
pub fn linearize(tree: &DialogTree) -> Vec<LinearDialog> {
    tree.paths()
        .into_iter()
        .enumerate()
        .filter_map(|(k, path)| {
            let leaf = &tree.posts[*path.last().unwrap()];
            let mut prev: Option<String> = None;
            let posts: Vec<LabeledPost> = path
                .iter()
                .map(|&i| &tree.posts[i])
                .filter(|p| !p.removed)
                .map(|p| {
                    let mut p = p.clone();
                    p.reply_to = prev.replace(p.post_id.clone());
                    p
                })
                .collect();
            (!posts.is_empty()).then(|| LinearDialog {
                id: format!("{}.b{}", tree.id, k),
                source_tree_id: tree.id.clone(),
                leaf_id: leaf.post_id.clone(),
                posts,
            })
        })
        .collect()
}

pub fn linearize_all(trees: &[DialogTree]) -> Vec<LinearDialog> {
    trees.iter().flat_map(linearize).collect()
}

/// Splits posts into connected reply components, one tree per root.
///
/// Components are ordered by root position in the input; a tree keeps its
/// `tree_id` unless the id covers several components, in which case the
/// components are suffixed `#0`, `#1`, ...
pub fn build_trees(posts: Vec<(String, LabeledPost)>) -> Result<Vec<DialogTree>> {
    let mut index: HashMap<&str, usize> = HashMap::with_capacity(posts.len());
    for (i, (_, p)) in posts.iter().enumerate() {
        if index.insert(p.post_id.as_str(), i).is_some() {
            return Err(Error::Structure(format!("duplicate post id {}", p.post_id)));
        }
    }
    for (_, p) in &posts {
        if let Some(parent) = &p.reply_to {
            if !index.contains_key(parent.as_str()) {
                return Err(Error::Structure(format!(
                    "dangling reply_to {parent} (post {})",
                    p.post_id
                )));
            }
        }
    }
    let owned_index: HashMap<String, usize> =
        index.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let bare: Vec<LabeledPost> = posts.iter().map(|(_, p)| p.clone()).collect();
    if let Some(cycle) = find_cycle(&bare, &owned_index) {
        return Err(Error::Structure(format!("reply cycle {}", cycle.join(" -> "))));
    }

    // root of each post, memoized along the reply chain
    let mut root_of: Vec<Option<usize>> = vec![None; posts.len()];
    for start in 0..posts.len() {
        let mut chain = Vec::new();
        let mut cur = start;
        let root = loop {
            if let Some(r) = root_of[cur] {
                break r;
            }
            chain.push(cur);
            match &posts[cur].1.reply_to {
                None => break cur,
                Some(parent) => cur = index[parent.as_str()],
            }
        };
        for c in chain {
            root_of[c] = Some(root);
        }
    }

    let mut order: Vec<usize> = Vec::new();
    let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, r) in root_of.iter().enumerate() {
        let r = r.unwrap();
        if r == i {
            order.push(r);
        }
        members.entry(r).or_default().push(i);
    }
    order.sort_unstable();

    let mut components_per_id: HashMap<&str, usize> = HashMap::new();
    for &r in &order {
        *components_per_id.entry(posts[r].0.as_str()).or_default() += 1;
    }
    let mut seen_per_id: HashMap<&str, usize> = HashMap::new();
    let mut trees = Vec::with_capacity(order.len());
    for r in order {
        let tree_id = posts[r].0.as_str();
        for &m in &members[&r] {
            if posts[m].0 != tree_id {
                return Err(Error::Structure(format!(
                    "post {} in tree {} replies into tree {tree_id}",
                    posts[m].1.post_id, posts[m].0
                )));
            }
        }
        let id = if components_per_id[tree_id] > 1 {
            let k = seen_per_id.entry(tree_id).or_default();
            *k += 1;
            format!("{tree_id}#{}", *k - 1)
        } else {
            tree_id.to_owned()
        };
        let tree_posts = members[&r].iter().map(|&m| posts[m].1.clone()).collect();
        trees.push(DialogTree::from_posts(id, tree_posts)?);
    }
    Ok(trees)
}

/// Every post id appearing in the given dialogs.
pub fn post_id_set<'a>(dialogs: impl IntoIterator<Item = &'a LinearDialog>) -> HashSet<&'a str> {
    dialogs.into_iter().flat_map(|d| d.post_ids()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, parent: Option<&str>) -> LabeledPost {
        LabeledPost::new(id, parent, "tok", None, None)
    }

    fn tree(spec: &[(&str, Option<&str>)]) -> DialogTree {
        DialogTree::from_posts("t", spec.iter().map(|(i, p)| post(i, *p)).collect()).unwrap()
    }

    #[test]
    fn chain_has_one_branch() {
        let t = tree(&[("a", None), ("b", Some("a")), ("c", Some("b"))]);
        let ds = linearize(&t);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].post_ids().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(ds[0].leaf_id, "c");
    }

    #[test]
    fn two_children_share_root() {
        let t = tree(&[("r", None), ("x", Some("r")), ("y", Some("r"))]);
        let ds = linearize(&t);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[0].post_ids().collect::<Vec<_>>(), ["r", "x"]);
        assert_eq!(ds[1].post_ids().collect::<Vec<_>>(), ["r", "y"]);
    }

    #[test]
    fn removed_posts_are_rechained() {
        let mut posts = vec![post("a", None), post("b", Some("a")), post("c", Some("b"))];
        posts[1].removed = true;
        let t = DialogTree::from_posts("t", posts).unwrap();
        let ds = linearize(&t);
        assert_eq!(ds[0].post_ids().collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(ds[0].posts[1].reply_to.as_deref(), Some("a"));
        assert_eq!(ds[0].posts[0].reply_to, None);
    }

    #[test]
    fn fully_removed_branch_is_dropped() {
        let mut p = post("a", None);
        p.removed = true;
        let t = DialogTree::from_posts("t", vec![p]).unwrap();
        assert!(linearize(&t).is_empty());
    }

    #[test]
    fn structural_errors() {
        let err = DialogTree::from_posts("t", vec![post("p1", None), post("p3", Some("p9"))])
            .unwrap_err();
        assert!(err.to_string().contains("dangling reply_to p9"), "{err}");

        let err =
            DialogTree::from_posts("t", vec![post("a", Some("b")), post("b", Some("a"))])
                .unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");

        let err = DialogTree::from_posts("t", vec![post("a", None), post("b", None)]).unwrap_err();
        assert!(err.to_string().contains("2 roots"), "{err}");
    }

    #[test]
    fn build_trees_splits_components() {
        let rows = vec![
            ("t1".to_owned(), post("a", None)),
            ("t1".to_owned(), post("b", Some("a"))),
            ("t1".to_owned(), post("c", None)),
            ("t2".to_owned(), post("d", None)),
        ];
        let trees = build_trees(rows).unwrap();
        let ids: Vec<_> = trees.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["t1#0", "t1#1", "t2"]);
        assert_eq!(trees[0].len(), 2);
    }

    #[test]
    fn build_trees_rejects_cross_tree_reply() {
        let rows = vec![
            ("t1".to_owned(), post("a", None)),
            ("t2".to_owned(), post("b", Some("a"))),
        ];
        assert!(build_trees(rows).is_err());
    }
}

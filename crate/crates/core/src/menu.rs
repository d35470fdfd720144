//! Principal menus and their free-disposal price closure.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ValueGrid;

/// Largest number of items an [`ItemSet`] can hold.
pub const MAX_ITEMS: usize = 64;
/// Largest item count for explicit menus (their closure table has `2^m` entries).
pub const MAX_EXPLICIT_ITEMS: usize = 12;

/// Set of items as a bitmask; item `i` (0-based) is bit `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ItemSet(pub u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn full(m: usize) -> Self {
        if m >= 64 {
            ItemSet(u64::MAX)
        } else {
            ItemSet((1u64 << m) - 1)
        }
    }

    pub fn from_items(items: &[usize]) -> Self {
        ItemSet(items.iter().fold(0, |acc, &i| acc | (1u64 << i)))
    }

    pub fn single(i: usize) -> Self {
        ItemSet(1u64 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(self, i: usize) -> Self {
        ItemSet(self.0 | (1u64 << i))
    }

    pub fn remove(self, i: usize) -> Self {
        ItemSet(self.0 & !(1u64 << i))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, o: Self) -> Self {
        ItemSet(self.0 | o.0)
    }

    pub fn intersect(self, o: Self) -> Self {
        ItemSet(self.0 & o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn items(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |&i| bits >> i & 1 == 1)
    }

    /// Lexicographic order on membership vectors `(x_1, .., x_m)` with
    /// absence before presence: at the lowest item where the sets differ,
    /// the set lacking it is smaller.
    pub fn lex_cmp(self, o: Self) -> std::cmp::Ordering {
        let diff = self.0 ^ o.0;
        if diff == 0 {
            return std::cmp::Ordering::Equal;
        }
        let low = diff & diff.wrapping_neg();
        if self.0 & low == 0 {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    }
}

impl fmt::Display for ItemSet {
    /// 1-based, as in `{1,3}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.items().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MenuKind {
    GrandBundle(f64),
    /// Disjoint blocks, each sold as a unit. Buying several blocks costs the
    /// sum of their prices; items outside every block are not offered.
    Partition(Vec<(ItemSet, f64)>),
    /// Arbitrary priced sets; other sets get the cheapest superset price.
    Explicit(Vec<(ItemSet, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Menu {
    kind: MenuKind,
    items: usize,
    /// Explicit menus only: closed price of every subset, indexed by mask.
    closure: Vec<f64>,
}

impl Menu {
    pub fn grand_bundle(items: usize, price: f64) -> Result<Self> {
        Self::new(items, MenuKind::GrandBundle(price))
    }

    pub fn partition(items: usize, blocks: Vec<(ItemSet, f64)>) -> Result<Self> {
        Self::new(items, MenuKind::Partition(blocks))
    }

    pub fn explicit(items: usize, entries: Vec<(ItemSet, f64)>) -> Result<Self> {
        Self::new(items, MenuKind::Explicit(entries))
    }

    pub fn new(items: usize, kind: MenuKind) -> Result<Self> {
        if items == 0 || items > MAX_ITEMS {
            return Err(Error::InvalidInput(format!("item count {items} outside 1..={MAX_ITEMS}")));
        }
        let full = ItemSet::full(items);
        let check_price = |p: f64| {
            if p >= 0.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("menu price {p} must be finite and non-negative")))
            }
        };
        let mut closure = Vec::new();
        match &kind {
            MenuKind::GrandBundle(p) => check_price(*p)?,
            MenuKind::Partition(blocks) => {
                let mut seen = ItemSet::EMPTY;
                for &(set, p) in blocks {
                    check_price(p)?;
                    if set.is_empty() || !set.is_subset(full) || !set.intersect(seen).is_empty() {
                        return Err(Error::InvalidInput(format!(
                            "partition block {set} is empty, out of range or overlapping"
                        )));
                    }
                    seen = seen.union(set);
                }
            }
            MenuKind::Explicit(entries) => {
                if items > MAX_EXPLICIT_ITEMS {
                    return Err(Error::UnsupportedMenuAtScale(format!(
                        "explicit menus support at most {MAX_EXPLICIT_ITEMS} items, got {items}"
                    )));
                }
                closure = vec![f64::INFINITY; 1usize << items];
                for &(set, p) in entries {
                    check_price(p)?;
                    if !set.is_subset(full) {
                        return Err(Error::InvalidInput(format!("menu entry {set} out of range")));
                    }
                    let slot = &mut closure[set.0 as usize];
                    *slot = slot.min(p);
                }
                // Cheapest priced superset, by a downward sweep over each bit.
                for bit in 0..items {
                    for mask in (0..closure.len()).rev() {
                        if mask >> bit & 1 == 0 {
                            let sup = closure[mask | (1 << bit)];
                            if sup < closure[mask] {
                                closure[mask] = sup;
                            }
                        }
                    }
                }
                closure[0] = 0.0;
            }
        }
        Ok(Menu { kind, items, closure })
    }

    pub fn kind(&self) -> &MenuKind {
        &self.kind
    }

    pub fn items(&self) -> usize {
        self.items
    }

    /// `p(T)`: zero for the empty set, `+inf` when nothing covers `T`.
    pub fn price(&self, t: ItemSet) -> f64 {
        if t.is_empty() {
            return 0.0;
        }
        match &self.kind {
            MenuKind::GrandBundle(p) => *p,
            MenuKind::Partition(blocks) => {
                let mut covered = ItemSet::EMPTY;
                let mut total = 0.0;
                for &(set, p) in blocks {
                    if !set.intersect(t).is_empty() {
                        total += p;
                        covered = covered.union(set);
                    }
                }
                if t.is_subset(covered) {
                    total
                } else {
                    f64::INFINITY
                }
            }
            MenuKind::Explicit(_) => self.closure[t.0 as usize],
        }
    }

    /// Same menu with prices expressed in grid-tick coordinates.
    pub fn in_ticks(&self, grid: &ValueGrid) -> Menu {
        let conv = |p: f64| grid.coord(p);
        let kind = match &self.kind {
            MenuKind::GrandBundle(p) => MenuKind::GrandBundle(conv(*p)),
            MenuKind::Partition(b) => MenuKind::Partition(b.iter().map(|&(s, p)| (s, conv(p))).collect()),
            MenuKind::Explicit(e) => MenuKind::Explicit(e.iter().map(|&(s, p)| (s, conv(p))).collect()),
        };
        Menu::new(self.items, kind).expect("rescaling preserves validity")
    }

    /// Parses `grand <p>`, `partition {i,j}=<p> ...` or `explicit {i,..}=<p> ...`
    /// with 1-based item indices.
    pub fn parse(text: &str, items: usize) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let Some((line_no, first)) = lines.next() else {
            return Err(Error::Parse { line: 1, message: "empty menu".into() });
        };
        let perr = |message: String| Error::Parse { line: line_no, message };
        let mut tokens: Vec<&str> = first.split_whitespace().collect();
        for (_, rest) in lines {
            tokens.extend(rest.split_whitespace());
        }
        let keyword = tokens[0];
        let kind = match keyword {
            "grand" => {
                if tokens.len() != 2 {
                    return Err(perr("expected `grand <price>`".into()));
                }
                MenuKind::GrandBundle(parse_price(tokens[1]).map_err(perr)?)
            }
            "partition" | "explicit" => {
                let entries = tokens[1..]
                    .iter()
                    .map(|t| parse_entry(t, items))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(perr)?;
                if keyword == "partition" {
                    MenuKind::Partition(entries)
                } else {
                    MenuKind::Explicit(entries)
                }
            }
            other => return Err(perr(format!("unknown menu kind {other:?}"))),
        };
        Menu::new(items, kind).map_err(|e| match e {
            Error::InvalidInput(msg) => perr(msg),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let entries = |v: &[(ItemSet, f64)]| {
            v.iter().map(|(s, p)| format!("{s}={p}")).collect::<Vec<_>>().join(" ")
        };
        match &self.kind {
            MenuKind::GrandBundle(p) => format!("grand {p}"),
            MenuKind::Partition(b) => format!("partition {}", entries(b)),
            MenuKind::Explicit(e) => format!("explicit {}", entries(e)),
        }
    }
}

impl fmt::Display for Menu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_price(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|p| p.is_finite() && *p >= 0.0)
        .ok_or_else(|| format!("bad price {s:?}"))
}

fn parse_entry(tok: &str, items: usize) -> std::result::Result<(ItemSet, f64), String> {
    let (set, price) = tok.split_once('=').ok_or_else(|| format!("expected {{i,..}}=<price>, got {tok:?}"))?;
    let inner = set
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("bad item set {set:?}"))?;
    let mut mask = ItemSet::EMPTY;
    for part in inner.split(',').filter(|p| !p.is_empty()) {
        let idx: usize = part.trim().parse().map_err(|_| format!("bad item index {part:?}"))?;
        if idx == 0 || idx > items {
            return Err(format!("item index {idx} outside 1..={items}"));
        }
        mask = mask.insert(idx - 1);
    }
    Ok((mask, parse_price(price)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grand_bundle_closure() {
        let m = Menu::grand_bundle(3, 1.0).unwrap();
        assert_eq!(m.price(ItemSet::from_items(&[0])), 1.0);
        assert_eq!(m.price(ItemSet::EMPTY), 0.0);
    }

    #[test]
    fn explicit_closure_takes_cheapest_superset() {
        let m = Menu::parse("explicit {1,2}=1.0 {1}=0.7", 2).unwrap();
        assert_eq!(m.price(ItemSet::from_items(&[0])), 0.7);
        assert_eq!(m.price(ItemSet::from_items(&[1])), 1.0);
        assert_eq!(m.price(ItemSet::from_items(&[0, 1])), 1.0);
        assert_eq!(m.price(ItemSet::EMPTY), 0.0);
        let sparse = Menu::parse("explicit {1}=0.5", 2).unwrap();
        assert_eq!(sparse.price(ItemSet::from_items(&[1])), f64::INFINITY);
    }

    #[test]
    fn partition_prices_add_across_blocks() {
        let m = Menu::parse("partition {1,2}=10 {3,4}=730", 5).unwrap();
        assert_eq!(m.price(ItemSet::from_items(&[0])), 10.0);
        assert_eq!(m.price(ItemSet::from_items(&[0, 2])), 740.0);
        assert_eq!(m.price(ItemSet::from_items(&[4])), f64::INFINITY);
        assert!(Menu::parse("partition {1,2}=1 {2,3}=1", 3).is_err());
    }

    #[test]
    fn text_roundtrip_and_errors() {
        for text in ["grand 101", "partition {1,2}=10 {3}=5", "explicit {1,2}=1 {1}=0.7"] {
            assert_eq!(Menu::parse(text, 3).unwrap().to_text(), text);
        }
        assert!(matches!(Menu::parse("grand", 2), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Menu::parse("\nbundle 3", 2), Err(Error::Parse { line: 2, .. })));
        assert!(Menu::parse("explicit {3}=1", 2).is_err());
    }

    #[test]
    fn lexicographic_order_prefers_missing_low_items() {
        let a = ItemSet::from_items(&[1, 2]);
        let b = ItemSet::from_items(&[0]);
        assert_eq!(a.lex_cmp(b), std::cmp::Ordering::Less);
        assert_eq!(ItemSet::EMPTY.lex_cmp(a), std::cmp::Ordering::Less);
        assert_eq!(b.to_string(), "{1}");
    }
}

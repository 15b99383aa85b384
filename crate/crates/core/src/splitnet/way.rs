//! Privatization ways and their letter names.
//!
//! Blocks are lettered bottom-up from `A`. An uppercase letter marks a shared
//! copy of the block and a lowercase letter a private one; when both exist the
//! shared letter comes first (`"AaB"`).

use std::fmt;

use crate::error::{Error, Result};

/// Maximum number of blocks the alphabet can name.
pub const MAX_BLOCKS: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WayKind {
    /// Blocks below the boundary are private, the rest shared.
    PrivateShared,
    /// The boundary block and everything above it are private.
    SharedPrivate,
    /// Fully shared model plus private copies of the blocks below the boundary.
    SharedPrivateShared,
    /// Fully shared model plus private copies of the boundary block and above.
    SharedSharedPrivate,
}

impl WayKind {
    pub const ALL: [WayKind; 4] = [
        WayKind::PrivateShared,
        WayKind::SharedPrivate,
        WayKind::SharedPrivateShared,
        WayKind::SharedSharedPrivate,
    ];

    pub fn abbrev(self) -> &'static str {
        match self {
            WayKind::PrivateShared => "PS",
            WayKind::SharedPrivate => "SP",
            WayKind::SharedPrivateShared => "SPS",
            WayKind::SharedSharedPrivate => "SSP",
        }
    }
}

/// A canonical `(kind, boundary)` pair. `boundary` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrivatizationWay {
    kind: WayKind,
    boundary: usize,
}

impl PrivatizationWay {
    /// Validates `boundary` against the block count and folds equivalent
    /// forms: SPS at boundary 1 has nothing to copy and is the fully shared way.
    pub fn new(kind: WayKind, boundary: usize, blocks: usize) -> Result<Self> {
        if !(1..=MAX_BLOCKS).contains(&blocks) {
            return Err(Error::config(format!(
                "block count must be in [1, {MAX_BLOCKS}], got {blocks}"
            )));
        }
        if !(1..=blocks).contains(&boundary) {
            return Err(Error::config(format!(
                "boundary must be in [1, {blocks}], got {boundary}"
            )));
        }
        let (kind, boundary) = match (kind, boundary) {
            (WayKind::SharedPrivateShared, 1) => (WayKind::PrivateShared, 1),
            other => other,
        };
        Ok(Self { kind, boundary })
    }

    pub fn fully_shared() -> Self {
        Self {
            kind: WayKind::PrivateShared,
            boundary: 1,
        }
    }

    pub fn fully_private() -> Self {
        Self {
            kind: WayKind::SharedPrivate,
            boundary: 1,
        }
    }

    /// Complete shared model alongside a complete private one (`"AaBb"`).
    pub fn full_double() -> Self {
        Self {
            kind: WayKind::SharedSharedPrivate,
            boundary: 1,
        }
    }

    pub fn kind(&self) -> WayKind {
        self.kind
    }

    pub fn boundary(&self) -> usize {
        self.boundary
    }

    /// True when the client keeps a complete shared model next to private copies.
    pub fn is_double_branch(&self) -> bool {
        matches!(
            self.kind,
            WayKind::SharedPrivateShared | WayKind::SharedSharedPrivate
        )
    }

    /// True when the aggregated blocks alone form a complete network.
    pub fn has_global_model(&self) -> bool {
        self.is_double_branch() || *self == Self::fully_shared()
    }

    /// Whether block `i` (0-based) has a shared copy.
    pub fn is_shared(&self, i: usize) -> bool {
        let below = i + 1 < self.boundary;
        match self.kind {
            WayKind::PrivateShared => !below,
            WayKind::SharedPrivate => below,
            WayKind::SharedPrivateShared | WayKind::SharedSharedPrivate => true,
        }
    }

    /// Whether block `i` (0-based) has a private copy.
    pub fn is_private(&self, i: usize) -> bool {
        let below = i + 1 < self.boundary;
        match self.kind {
            WayKind::PrivateShared | WayKind::SharedPrivateShared => below,
            WayKind::SharedPrivate | WayKind::SharedSharedPrivate => !below,
        }
    }

    pub fn format(&self, blocks: usize) -> String {
        format_way(*self, blocks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Shared,
    Private,
    Pair,
}

pub fn parse_way(name: &str, blocks: usize) -> Result<PrivatizationWay> {
    if !(1..=MAX_BLOCKS).contains(&blocks) {
        return Err(Error::config(format!(
            "block count must be in [1, {MAX_BLOCKS}], got {blocks}"
        )));
    }
    let err = |position: usize, reason: String| Error::WayParse {
        name: name.to_string(),
        position,
        reason,
    };
    let chars: Vec<char> = name.chars().collect();
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(blocks);
    for i in 0..blocks {
        let upper = (b'A' + i as u8) as char;
        let lower = upper.to_ascii_lowercase();
        let start = pos;
        let token = match chars.get(pos) {
            Some(&c) if c == upper => {
                pos += 1;
                if chars.get(pos) == Some(&lower) {
                    pos += 1;
                    Token::Pair
                } else {
                    Token::Shared
                }
            }
            Some(&c) if c == lower => {
                pos += 1;
                if chars.get(pos) == Some(&upper) {
                    return Err(err(
                        pos,
                        format!("'{lower}' must follow '{upper}', not precede it"),
                    ));
                }
                Token::Private
            }
            Some(&c) => {
                return Err(err(
                    pos,
                    format!("expected '{upper}' or '{lower}', found '{c}'"),
                ))
            }
            None => {
                return Err(err(
                    pos,
                    format!("expected '{upper}' or '{lower}', found end of name"),
                ))
            }
        };
        tokens.push((token, start));
    }
    if let Some(&c) = chars.get(pos) {
        return Err(err(
            pos,
            format!("unexpected '{c}' after the last of {blocks} blocks"),
        ));
    }

    // Allowed shapes: S* then (P* | X*), P+ then S*, X+ then S*.
    let first = tokens[0].0;
    let split = tokens
        .iter()
        .position(|&(t, _)| t != first)
        .unwrap_or(tokens.len());
    let tail = tokens.get(split).map(|&(t, _)| t);
    if matches!(
        (first, tail),
        (Token::Private, Some(Token::Pair)) | (Token::Pair, Some(Token::Private))
    ) {
        return Err(err(
            tokens[split].1,
            "private-only and paired blocks cannot be mixed".into(),
        ));
    }
    if let Some(t) = tail {
        if let Some(&(_, at)) = tokens[split..].iter().find(|&&(u, _)| u != t) {
            return Err(err(
                at,
                "block breaks the bottom-first, shared-first ordering".into(),
            ));
        }
    }

    let b = split + 1;
    let (kind, boundary) = match (first, tail) {
        (Token::Shared, None) => (WayKind::PrivateShared, 1),
        (Token::Shared, Some(Token::Private)) => (WayKind::SharedPrivate, b),
        (Token::Shared, Some(_)) => (WayKind::SharedSharedPrivate, b),
        (Token::Private, None) => (WayKind::SharedPrivate, 1),
        (Token::Private, Some(_)) => (WayKind::PrivateShared, b),
        (Token::Pair, None) => (WayKind::SharedSharedPrivate, 1),
        (Token::Pair, Some(_)) => (WayKind::SharedPrivateShared, b),
    };
    PrivatizationWay::new(kind, boundary, blocks)
}

pub fn format_way(way: PrivatizationWay, blocks: usize) -> String {
    let mut name = String::with_capacity(2 * blocks);
    for i in 0..blocks {
        let upper = (b'A' + i as u8) as char;
        if way.is_shared(i) {
            name.push(upper);
        }
        if way.is_private(i) {
            name.push(upper.to_ascii_lowercase());
        }
    }
    name
}

/// All distinct ways for `blocks` blocks, in PS, SP, SPS, SSP order with
/// ascending boundaries and duplicates removed.
pub fn enumerate_ways(blocks: usize) -> Result<Vec<PrivatizationWay>> {
    let mut out: Vec<PrivatizationWay> = Vec::new();
    for kind in WayKind::ALL {
        for b in 1..=blocks {
            let w = PrivatizationWay::new(kind, b, blocks)?;
            if !out.contains(&w) {
                out.push(w);
            }
        }
    }
    Ok(out)
}

impl fmt::Display for PrivatizationWay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(b={})", self.kind.abbrev(), self.boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use WayKind::*;

    fn way(kind: WayKind, b: usize, l: usize) -> PrivatizationWay {
        PrivatizationWay::new(kind, b, l).unwrap()
    }

    #[test]
    fn parses_named_examples() {
        assert_eq!(parse_way("AaBbCcDE", 5).unwrap(), way(SharedPrivateShared, 4, 5));
        assert_eq!(parse_way("ABc", 3).unwrap(), way(SharedPrivate, 3, 3));
        assert_eq!(parse_way("ABb", 2).unwrap(), way(SharedSharedPrivate, 2, 2));
        assert_eq!(parse_way("AB", 2).unwrap(), PrivatizationWay::fully_shared());
        assert_eq!(parse_way("ab", 2).unwrap(), PrivatizationWay::fully_private());
        assert_eq!(parse_way("AaBb", 2).unwrap(), PrivatizationWay::full_double());
        assert_eq!(parse_way("aB", 2).unwrap(), way(PrivateShared, 2, 2));
    }

    #[test]
    fn formats_named_examples() {
        assert_eq!(format_way(way(SharedPrivateShared, 2, 2), 2), "AaB");
        assert_eq!(format_way(way(SharedSharedPrivate, 1, 2), 2), "AaBb");
        assert_eq!(format_way(way(SharedPrivate, 1, 2), 2), "ab");
        assert_eq!(format_way(way(SharedPrivateShared, 1, 2), 2), "AB");
    }

    #[test]
    fn rejects_malformed_names() {
        let pos = |name: &str, l: usize| match parse_way(name, l) {
            Err(Error::WayParse { position, .. }) => position,
            other => panic!("{name}: {other:?}"),
        };
        assert_eq!(pos("ZZ", 2), 0);
        assert_eq!(pos("AC", 2), 1);
        assert_eq!(pos("aAB", 2), 1);
        assert_eq!(pos("A", 2), 1);
        assert_eq!(pos("ABC", 2), 2);
        assert_eq!(pos("aBc", 3), 2);
        assert_eq!(pos("AaBc", 3), 3);
        assert_eq!(pos("AbC", 3), 2);
        assert_eq!(pos("AaBCc", 3), 3);
    }

    #[test]
    fn enumerates_seven_ways_for_two_blocks() {
        let names: Vec<String> = enumerate_ways(2)
            .unwrap()
            .into_iter()
            .map(|w| format_way(w, 2))
            .collect();
        assert_eq!(names, ["AB", "aB", "ab", "Ab", "AaB", "AaBb", "ABb"]);
    }

    #[test]
    fn enumerates_single_block() {
        let names: Vec<String> = enumerate_ways(1)
            .unwrap()
            .into_iter()
            .map(|w| format_way(w, 1))
            .collect();
        assert_eq!(names, ["A", "a", "Aa"]);
    }

    #[test]
    fn six_blocks_contain_figure_labels() {
        let names: Vec<String> = enumerate_ways(6)
            .unwrap()
            .into_iter()
            .map(|w| format_way(w, 6))
            .collect();
        assert!(names.contains(&"ABCDEf".to_string()));
        assert!(names.contains(&"abcdeF".to_string()));
        assert!(names.contains(&"ABCDEF".to_string()));
        assert_eq!(names.len(), 4 * 6 - 1);
    }

    #[test]
    fn boundary_out_of_range() {
        assert!(PrivatizationWay::new(PrivateShared, 0, 2).is_err());
        assert!(PrivatizationWay::new(PrivateShared, 3, 2).is_err());
        assert!(PrivatizationWay::new(PrivateShared, 1, 27).is_err());
    }

    #[test]
    fn naming_bijection_up_to_eight_blocks() {
        for l in 1..=8 {
            for w in enumerate_ways(l).unwrap() {
                let name = format_way(w, l);
                assert_eq!(parse_way(&name, l).unwrap(), w, "{name}");
            }
        }
    }
}

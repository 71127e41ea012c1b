use std::fmt;
use std::sync::{Arc, OnceLock};

/// A channel, variable or leader-id name.
///
/// Names carry an optional freshness tag; generated names reuse a readable
/// base and get a tag that no name in the seeding term carries.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    base: Arc<str>,
    tag: Option<u32>,
}

// Bases that the parser never produces. They mark canonical binder
// indices and the scratch names used while canonicalizing.
pub(crate) const BOUND_BASE: &str = "_";
pub(crate) const TEMP_BASE: &str = "#";
pub(crate) const HOLE_BASE: &str = "?";
pub(crate) const MARK_BASE: &str = "!";

fn interned(base: &'static str) -> Arc<str> {
    static BOUND: OnceLock<Arc<str>> = OnceLock::new();
    static TEMP: OnceLock<Arc<str>> = OnceLock::new();
    static HOLE: OnceLock<Arc<str>> = OnceLock::new();
    static MARK: OnceLock<Arc<str>> = OnceLock::new();
    let cell = match base {
        BOUND_BASE => &BOUND,
        TEMP_BASE => &TEMP,
        HOLE_BASE => &HOLE,
        MARK_BASE => &MARK,
        _ => return Arc::from(base),
    };
    cell.get_or_init(|| Arc::from(base)).clone()
}

impl Name {
    pub fn new(base: impl AsRef<str>) -> Self {
        Name {
            base: Arc::from(base.as_ref()),
            tag: None,
        }
    }

    pub fn tagged(base: impl AsRef<str>, tag: u32) -> Self {
        Name {
            base: Arc::from(base.as_ref()),
            tag: Some(tag),
        }
    }

    /// The canonical name of the binder at nesting index `index`.
    pub fn bound(index: u32) -> Self {
        Name {
            base: interned(BOUND_BASE),
            tag: Some(index),
        }
    }

    pub(crate) fn special(base: &'static str, tag: u32) -> Self {
        Name {
            base: interned(base),
            tag: Some(tag),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tag(&self) -> Option<u32> {
        self.tag
    }

    /// Index of a canonical binder name, if this is one.
    pub fn bound_index(&self) -> Option<u32> {
        if &*self.base == BOUND_BASE {
            self.tag
        } else {
            None
        }
    }

    /// Leader ids are the names made of digits only.
    pub fn is_id(&self) -> bool {
        self.tag.is_none() && !self.base.is_empty() && self.base.bytes().all(|b| b.is_ascii_digit())
    }

    /// A sibling name with the same base and the given tag.
    pub fn with_tag(&self, tag: u32) -> Self {
        Name {
            base: self.base.clone(),
            tag: Some(tag),
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            None => f.write_str(&self.base),
            Some(t) => write!(f, "{}'{}", self.base, t),
        }
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl serde::Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Extra information a label carries after encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelTag {
    Plain,
    /// `l'!`: the label of a sending summand seen from the internal side.
    Send,
    /// `l'?`
    Recv,
    /// `lam'j`: an administrative arm label numbered by summand position.
    Arm(u32),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    base: Arc<str>,
    tag: LabelTag,
}

impl Label {
    pub fn new(base: impl AsRef<str>) -> Self {
        Label {
            base: Arc::from(base.as_ref()),
            tag: LabelTag::Plain,
        }
    }

    pub fn with_tag(base: impl AsRef<str>, tag: LabelTag) -> Self {
        Label {
            base: Arc::from(base.as_ref()),
            tag,
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tag(&self) -> LabelTag {
        self.tag
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            LabelTag::Plain => f.write_str(&self.base),
            LabelTag::Send => write!(f, "{}'!", self.base),
            LabelTag::Recv => write!(f, "{}'?", self.base),
            LabelTag::Arm(j) => write!(f, "{}'{}", self.base, j),
        }
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_uses_base_and_tag() {
        assert_eq!(Name::new("x"), Name::new("x"));
        assert_ne!(Name::new("x"), Name::tagged("x", 0));
        assert_ne!(Name::tagged("x", 1), Name::tagged("x", 2));
        assert_eq!(Name::bound(3).bound_index(), Some(3));
        assert_eq!(Name::tagged("x", 3).bound_index(), None);
    }

    #[test]
    fn ids_are_digit_names() {
        assert!(Name::new("12").is_id());
        assert!(!Name::new("o_1").is_id());
        assert!(!Name::tagged("1", 2).is_id());
    }

    #[test]
    fn display_is_reparsable_shape() {
        assert_eq!(Name::tagged("c", 4).to_string(), "c'4");
        assert_eq!(Label::with_tag("l", LabelTag::Send).to_string(), "l'!");
        assert_eq!(Label::with_tag("lam", LabelTag::Arm(2)).to_string(), "lam'2");
    }
}

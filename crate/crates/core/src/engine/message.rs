use alloc::vec;
use alloc::vec::Vec;

/// Rumor identifier: the label of the node that originated the rumor.
pub type RumorId = usize;

/// Fixed-universe bitset of rumor ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RumorSet {
    words: Vec<u64>,
    len: usize,
}

impl RumorSet {
    pub fn new(universe: usize) -> Self {
        RumorSet { words: vec![0; universe.div_ceil(64)], len: 0 }
    }

    pub fn singleton(universe: usize, rumor: RumorId) -> Self {
        let mut s = Self::new(universe);
        s.insert(rumor);
        s
    }

    /// Returns `true` if the rumor was not already present.
    pub fn insert(&mut self, rumor: RumorId) -> bool {
        let (w, b) = (rumor / 64, rumor % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        self.len += fresh as usize;
        fresh
    }

    pub fn contains(&self, rumor: RumorId) -> bool {
        self.words.get(rumor / 64).is_some_and(|w| w & (1 << (rumor % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Adds every rumor of `other`; returns the number of new rumors.
    pub fn union_with(&mut self, other: &RumorSet) -> usize {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        let before = self.len;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.len = self.words.iter().map(|w| w.count_ones() as usize).sum();
        self.len - before
    }

    pub fn iter(&self) -> impl Iterator<Item = RumorId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

impl FromIterator<RumorId> for RumorSet {
    fn from_iter<I: IntoIterator<Item = RumorId>>(iter: I) -> Self {
        let mut s = RumorSet::default();
        for r in iter {
            s.insert(r);
        }
        s
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for RumorSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for RumorSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<RumorId>::deserialize(d)?;
        Ok(v.into_iter().collect())
    }
}

/// Small side-channel record attached to aggregated and bounded messages.
/// Every field fits in `O(log n)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aux {
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub sender: Option<usize>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub height: Option<u32>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub parity: Option<bool>,
}

impl Aux {
    pub fn from_sender(sender: usize) -> Self {
        Aux { sender: Some(sender), ..Aux::default() }
    }
}

/// Which message variants a protocol is allowed to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MessageModel {
    Unbounded,
    Bounded,
    FireAndForward,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Message {
    /// Any number of rumors aggregated together.
    Unbounded { rumors: RumorSet, aux: Aux },
    /// Exactly one rumor plus a few bits of side information.
    Bounded { rumor: RumorId, aux: Aux },
    /// Exactly one rumor, nothing else.
    Fnf { rumor: RumorId },
}

impl Message {
    pub fn model(&self) -> MessageModel {
        match self {
            Message::Unbounded { .. } => MessageModel::Unbounded,
            Message::Bounded { .. } => MessageModel::Bounded,
            Message::Fnf { .. } => MessageModel::FireAndForward,
        }
    }

    pub fn aux(&self) -> Option<&Aux> {
        match self {
            Message::Unbounded { aux, .. } | Message::Bounded { aux, .. } => Some(aux),
            Message::Fnf { .. } => None,
        }
    }

    /// Rumors carried by the message, ascending.
    pub fn rumors(&self) -> impl Iterator<Item = RumorId> + '_ {
        let (set, single) = match self {
            Message::Unbounded { rumors, .. } => (Some(rumors), None),
            Message::Bounded { rumor, .. } | Message::Fnf { rumor } => (None, Some(*rumor)),
        };
        set.into_iter().flat_map(RumorSet::iter).chain(single)
    }

    pub fn carries(&self, rumor: RumorId) -> bool {
        match self {
            Message::Unbounded { rumors, .. } => rumors.contains(rumor),
            Message::Bounded { rumor: r, .. } | Message::Fnf { rumor: r } => *r == rumor,
        }
    }

    /// The single rumor of a bounded or fire-and-forward message.
    pub fn single_rumor(&self) -> Option<RumorId> {
        match self {
            Message::Unbounded { .. } => None,
            Message::Bounded { rumor, .. } | Message::Fnf { rumor } => Some(*rumor),
        }
    }
}

/// What a node does in one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// Receive state.
    Listen,
    /// Transmit state, sending a message to the parent.
    Transmit(Message),
    /// Transmit state with nothing sent: no channel activity, and under half
    /// duplex no reception either. Used for suppressed firings.
    Mute,
}

impl Action {
    pub fn message(&self) -> Option<&Message> {
        match self {
            Action::Transmit(m) => Some(m),
            _ => None,
        }
    }
}

impl From<Option<Message>> for Action {
    fn from(m: Option<Message>) -> Self {
        m.map_or(Action::Listen, Action::Transmit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rumor_set_ops() {
        let mut a = RumorSet::new(100);
        assert!(a.insert(3));
        assert!(!a.insert(3));
        assert!(a.insert(70));
        let b: RumorSet = [1, 3, 99].into_iter().collect();
        assert_eq!(a.union_with(&b), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), [1, 3, 70, 99]);
        assert_eq!(a.len(), 4);
        assert!(a.contains(99) && !a.contains(98) && !a.contains(10_000));
    }

    #[test]
    fn message_rumors() {
        let m = Message::Bounded { rumor: 5, aux: Aux::from_sender(2) };
        assert_eq!(m.rumors().collect::<Vec<_>>(), [5]);
        assert!(m.carries(5));
        let u = Message::Unbounded { rumors: [4, 2].into_iter().collect(), aux: Aux::default() };
        assert_eq!(u.rumors().collect::<Vec<_>>(), [2, 4]);
        assert_eq!(u.single_rumor(), None);
        assert_eq!(Message::Fnf { rumor: 1 }.aux(), None);
    }
}

//! Persistent singly linked list with cached length and structural hash.

use std::hash::{Hash, Hasher};
use std::rc::Rc;

struct Cell<T> {
    val: T,
    next: Option<Rc<Cell<T>>>,
    len: u32,
    hash: u64,
}

pub struct PList<T> {
    head: Option<Rc<Cell<T>>>,
}

impl<T> Clone for PList<T> {
    fn clone(&self) -> Self {
        PList { head: self.head.clone() }
    }
}

impl<T> Default for PList<T> {
    fn default() -> Self {
        PList { head: None }
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix-style combiner; order sensitive
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(a << 6).wrapping_add(a >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn hash_one<H: Hash>(v: &H) -> u64 {
    let mut h = rustc_hash::FxHasher::default();
    v.hash(&mut h);
    h.finish()
}

impl<T: Hash> PList<T> {
    pub fn new() -> Self {
        PList { head: None }
    }

    pub fn push(&self, val: T) -> Self {
        let (len, rest) = match &self.head {
            Some(c) => (c.len + 1, c.hash),
            None => (1, 0),
        };
        let hash = mix(rest, hash_one(&val));
        PList { head: Some(Rc::new(Cell { val, next: self.head.clone(), len, hash })) }
    }

    pub fn from_slice_front_first(items: &[T]) -> Self
    where
        T: Clone,
    {
        let mut l = PList::new();
        for v in items.iter().rev() {
            l = l.push(v.clone());
        }
        l
    }
}

impl<T> PList<T> {
    pub fn head(&self) -> Option<&T> {
        self.head.as_ref().map(|c| &c.val)
    }

    pub fn tail(&self) -> Self {
        PList { head: self.head.as_ref().and_then(|c| c.next.clone()) }
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_none()
    }

    pub fn len(&self) -> usize {
        self.head.as_ref().map_or(0, |c| c.len as usize)
    }

    pub fn hash_value(&self) -> u64 {
        self.head.as_ref().map_or(0, |c| c.hash)
    }

    pub fn iter(&self) -> Iter<'_, T> {
        Iter { cur: self.head.as_deref() }
    }

    pub fn ptr_eq(&self, other: &Self) -> bool {
        match (&self.head, &other.head) {
            (None, None) => true,
            (Some(a), Some(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }
}

pub struct Iter<'a, T> {
    cur: Option<&'a Cell<T>>,
}

impl<'a, T> Iterator for Iter<'a, T> {
    type Item = &'a T;
    fn next(&mut self) -> Option<&'a T> {
        let c = self.cur?;
        self.cur = c.next.as_deref();
        Some(&c.val)
    }
}

impl<T: PartialEq> PartialEq for PList<T> {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() || self.hash_value() != other.hash_value() {
            return false;
        }
        let mut a = self.head.as_ref();
        let mut b = other.head.as_ref();
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Rc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.val != y.val {
                        return false;
                    }
                    a = x.next.as_ref();
                    b = y.next.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl<T: PartialEq> Eq for PList<T> {}

impl<T> Hash for PList<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash_value());
        state.write_usize(self.len());
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for PList<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality_across_allocations() {
        let a = PList::new().push(3).push(2).push(1);
        let b = PList::from_slice_front_first(&[1, 2, 3]);
        assert_eq!(a, b);
        assert_eq!(a.hash_value(), b.hash_value());
        assert_ne!(a, b.tail());
        assert_eq!(a.iter().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn order_matters() {
        let a = PList::from_slice_front_first(&[1, 2]);
        let b = PList::from_slice_front_first(&[2, 1]);
        assert_ne!(a, b);
    }
}

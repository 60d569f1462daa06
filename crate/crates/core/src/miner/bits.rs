/// Fixed-width bitset over transaction (cluster instance) positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Bits {
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&self, other: &Bits) -> Bits {
        Bits {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_count() {
        let mut a = Bits::zeros(130);
        let mut b = Bits::zeros(130);
        for i in [0, 5, 64, 129] {
            a.set(i);
        }
        for i in [5, 64, 100] {
            b.set(i);
        }
        assert_eq!(a.count(), 4);
        assert_eq!(a.and(&b).count(), 2);
        assert_eq!(a.and(&b).ones().collect::<Vec<_>>(), vec![5, 64]);
        assert_eq!(a.ones().collect::<Vec<_>>(), vec![0, 5, 64, 129]);
    }
}

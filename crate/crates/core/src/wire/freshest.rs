/// Single-slot receive buffer that keeps only the item with the highest
/// sequence number seen so far.
#[derive(Debug, Clone)]
pub struct FreshestSlot<T> {
    slot: Option<(u64, T)>,
    stale: u64,
}

impl<T> Default for FreshestSlot<T> {
    fn default() -> Self {
        Self { slot: None, stale: 0 }
    }
}

impl<T> FreshestSlot<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true when `item` replaced the held value.
    pub fn offer(&mut self, seq: u64, item: T) -> bool {
        match &self.slot {
            Some((held, _)) if *held >= seq => {
                self.stale += 1;
                false
            }
            _ => {
                self.slot = Some((seq, item));
                true
            }
        }
    }

    pub fn latest(&self) -> Option<&T> {
        self.slot.as_ref().map(|(_, t)| t)
    }

    pub fn latest_seq(&self) -> Option<u64> {
        self.slot.as_ref().map(|(s, _)| *s)
    }

    pub fn take(&mut self) -> Option<(u64, T)> {
        self.slot.take()
    }

    /// Offers rejected as older than (or equal to) the held one.
    pub fn stale_count(&self) -> u64 {
        self.stale
    }
}

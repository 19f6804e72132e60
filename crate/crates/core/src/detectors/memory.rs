/// A buffer the detector allocated or took over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferRecord {
    pub name: &'static str,
    pub words: usize,
}

/// Complex words held by detector-owned buffers over one run.
///
/// A buffer counts from `alloc` to `free`; anything never freed stays live
/// to the end. The channel storage counts while the detector still reads or
/// overwrites it, the received vector only if the detector mutates it.
/// Integer permutations and the returned outputs are not counted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemLedger {
    peak_words: usize,
    live_words: usize,
    live: Vec<BufferRecord>,
    buffers: Vec<BufferRecord>,
}

impl MemLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, name: &'static str, words: usize) {
        let rec = BufferRecord { name, words };
        self.live_words += words;
        self.peak_words = self.peak_words.max(self.live_words);
        self.live.push(rec.clone());
        self.buffers.push(rec);
    }

    /// Releases the most recent live buffer called `name`.
    pub fn free(&mut self, name: &'static str) {
        if let Some(pos) = self.live.iter().rposition(|b| b.name == name) {
            self.live_words -= self.live.remove(pos).words;
        }
    }

    /// Largest number of words live at once.
    pub fn peak_words(&self) -> usize {
        self.peak_words
    }

    pub fn live_words(&self) -> usize {
        self.live_words
    }

    /// Every buffer allocated, in allocation order.
    pub fn buffers(&self) -> &[BufferRecord] {
        &self.buffers
    }

    pub fn max_buffer(&self) -> usize {
        self.buffers.iter().map(|b| b.words).max().unwrap_or(0)
    }

    /// `name=words` pairs joined by `;`.
    pub fn describe(&self) -> String {
        self.buffers.iter().map(|b| format!("{}={}", b.name, b.words)).collect::<Vec<_>>().join(";")
    }
}

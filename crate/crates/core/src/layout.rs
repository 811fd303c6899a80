/// Array extents shared by every grid-valued quantity.
///
/// Employed arrays are stored productivity-major as `[eta][wage][wealth]`,
/// unemployed arrays as `[eta][wealth]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n_eta: usize,
    pub n_w: usize,
    pub n_a: usize,
}

impl Dims {
    pub fn new(n_eta: usize, n_w: usize, n_a: usize) -> Self {
        Dims { n_eta, n_w, n_a }
    }

    #[inline]
    pub fn emp(&self, eta: usize, w: usize, a: usize) -> usize {
        (eta * self.n_w + w) * self.n_a + a
    }

    #[inline]
    pub fn unemp(&self, eta: usize, a: usize) -> usize {
        eta * self.n_a + a
    }

    pub fn emp_len(&self) -> usize {
        self.n_eta * self.n_w * self.n_a
    }

    pub fn unemp_len(&self) -> usize {
        self.n_eta * self.n_a
    }

    /// Number of worker states: every (eta, wage, wealth) employed plus every (eta, wealth) unemployed.
    pub fn n_states(&self) -> usize {
        self.emp_len() + self.unemp_len()
    }
}

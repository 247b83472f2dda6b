//! Scoped flush-to-zero. Green's function entries span hundreds of orders of
//! magnitude inside one block, and subnormal intermediates slow dense kernels
//! down by an order of magnitude. Values below `f64::MIN_POSITIVE` are far
//! under the underflow floor used by the classifiers, so flushing them does not
//! change any reported quantity.

#![allow(unsafe_code)]

/// Enables FTZ and DAZ on the current thread until dropped.
pub struct FlushDenormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

#[cfg(target_arch = "x86_64")]
#[allow(deprecated)]
impl FlushDenormals {
    pub fn new() -> Self {
        // SAFETY: reading and writing MXCSR only changes the rounding of
        // subnormal values on this thread; the previous state is restored on drop.
        let saved = unsafe { core::arch::x86_64::_mm_getcsr() };
        unsafe { core::arch::x86_64::_mm_setcsr(saved | 0x8040) };
        Self { saved }
    }
}

#[cfg(target_arch = "x86_64")]
#[allow(deprecated)]
impl Drop for FlushDenormals {
    fn drop(&mut self) {
        // SAFETY: restores the value read in `new`.
        unsafe { core::arch::x86_64::_mm_setcsr(self.saved) };
    }
}

#[cfg(not(target_arch = "x86_64"))]
impl FlushDenormals {
    pub fn new() -> Self {
        Self {}
    }
}

impl Default for FlushDenormals {
    fn default() -> Self {
        Self::new()
    }
}

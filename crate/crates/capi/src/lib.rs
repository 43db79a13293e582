//! C ABI for the crossfield library. Placeholder; surface lands with the
//! core modules it wraps.

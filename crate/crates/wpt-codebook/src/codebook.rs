//! Flat codebook design (stub).

//! Tree codebook design (stub).

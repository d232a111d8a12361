//! Harness (stub).

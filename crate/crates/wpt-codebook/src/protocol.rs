//! Protocols (stub).

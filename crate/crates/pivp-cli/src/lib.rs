//! Expression language front end (placeholder).

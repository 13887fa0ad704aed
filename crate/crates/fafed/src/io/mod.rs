//! File formats and renderers: results CSV, key=value configs, SVG charts,
//! and comparison tables.

pub mod config;
pub mod csv;
pub mod svg;
pub mod table;

//! Criterion benchmarks for the dbcfr pipeline stages live in `benches/`.

//! Library half of the `subeq` command: the built-in self-test, shared by the
//! binary and the integration tests.

pub mod selftest;

//! Compiles and runs the code blocks of the guide in `book/` as doc-tests.
//! One module per chapter, so a failing block points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/cholesky.md")]
pub mod cholesky {}
#[doc = include_str!("../../../book/src/lazy-fast.md")]
pub mod lazy_fast {}
#[doc = include_str!("../../../book/src/variants.md")]
pub mod variants {}
#[doc = include_str!("../../../book/src/double-greedy.md")]
pub mod double_greedy {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

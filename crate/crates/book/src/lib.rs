// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Runs the code listings of the guide in `book/` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/conventions.md")]
pub mod conventions {}

#[doc = include_str!("../../../book/src/noise.md")]
pub mod noise {}

#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}

#[doc = include_str!("../../../book/src/backend.md")]
pub mod backend {}

#[doc = include_str!("../../../book/src/state_tomography.md")]
pub mod state_tomography {}

#[doc = include_str!("../../../book/src/process_tomography.md")]
pub mod process_tomography {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

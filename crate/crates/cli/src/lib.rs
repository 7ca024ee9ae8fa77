// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Batch driver behind the `qptkit` binary: χ reports, fidelity tables,
//! plot grids and state tomography reports.

pub mod commands;
pub mod report;

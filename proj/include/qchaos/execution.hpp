#pragma once

namespace qchaos {

/// Selects the serial reference path or the OpenMP path of a kernel.
/// Both paths produce bit-identical results.
enum class Execution { serial, parallel };

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace qchaos

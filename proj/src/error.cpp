#include "tdsr/error.hpp"

namespace tdsr {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::dimension: return "dimension error";
        case ErrorKind::contour: return "contour error";
        case ErrorKind::stiffness: return "stiffness error";
        case ErrorKind::insufficient_levels: return "insufficient-levels error";
        case ErrorKind::sign: return "sign error";
        case ErrorKind::root_failure: return "root-failure";
        case ErrorKind::newton_failure: return "Newton-failure";
        case ErrorKind::singular: return "singularity error";
        case ErrorKind::positivity: return "positivity failure";
        case ErrorKind::split: return "split error";
        case ErrorKind::degenerate_split: return "degenerate-split error";
        case ErrorKind::divergence: return "divergence error";
        case ErrorKind::stencil: return "stencil error";
        case ErrorKind::convergence: return "non-convergence";
        case ErrorKind::instability: return "instability error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::config: return "config error";
        case ErrorKind::io: return "I/O error";
    }
    return "error";
}

}  // namespace tdsr

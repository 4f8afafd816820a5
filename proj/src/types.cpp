#include "rmcnoc/types.hpp"

namespace rmcnoc {

std::string_view to_string(Port p) {
    switch (p) {
    case Port::North: return "N";
    case Port::East: return "E";
    case Port::South: return "S";
    case Port::West: return "W";
    case Port::Local: return "L";
    }
    return "?";
}

FlitKind flit_kind_for(int index, int length) {
    if (length == 1) return FlitKind::Single;
    if (index == 0) return FlitKind::Head;
    if (index == length - 1) return FlitKind::Tail;
    return FlitKind::Body;
}

}  // namespace rmcnoc

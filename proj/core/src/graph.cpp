#include "rtgr/graph.hpp"

namespace rtgr {

template class GraphT<float>;
template class GraphT<double>;

}  // namespace rtgr

#include "ftau/power_series.hpp"

// The series engine is a header template (it also runs in quad precision
// inside the radial solver). This unit pins the double instantiations used
// everywhere else so they are compiled once.

namespace ftau {

template struct SeriesT<double>;

template SeriesT<double> series_add<double>(const SeriesT<double>&, const SeriesT<double>&);
template SeriesT<double> series_sub<double>(const SeriesT<double>&, const SeriesT<double>&);
template SeriesT<double> series_mul<double>(const SeriesT<double>&, const SeriesT<double>&);
template SeriesT<double> series_div<double>(const SeriesT<double>&, const SeriesT<double>&);
template SeriesT<double> series_arith<double>(const SeriesT<double>&, const SeriesT<double>&, ArithOp);
template SeriesT<double> series_compose<double>(const SeriesT<double>&, const SeriesT<double>&);
template SeriesT<double> series_elementary<double>(Elementary, double, int, double);
template SeriesT<double> invert_series<double>(const SeriesT<double>&, int);

} // namespace ftau

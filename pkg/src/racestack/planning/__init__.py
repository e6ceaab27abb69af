from .centerline import CenterlinePoints, NoValidEdges, filter_and_sort, smooth_control_points  # noqa: F401
from .delaunay import DegenerateInput, Triangulation, delaunay_triangulate, merge_close_points  # noqa: F401
from .spline import OutOfRange, SplinePath, ZeroPivot, fit_spline, spline_query, tdma_solve  # noqa: F401

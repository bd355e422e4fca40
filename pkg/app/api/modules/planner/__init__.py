"""
Split planner: concave points of the filter-rate curve and VNF placement
"""

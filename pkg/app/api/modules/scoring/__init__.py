"""
Anomaly scoring, thresholding and AUC evaluation
"""

"""
Forward execution of pipelines with synthetic weights, and the tensor wire format
"""

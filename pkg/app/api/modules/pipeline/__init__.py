"""
Pipeline description: block specs, shape calculus, filter rates, cost accounting
"""

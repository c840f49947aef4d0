"""A small shop backend."""
from .models import Customer, Order, Product

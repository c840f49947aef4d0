"""Stock keeping."""
from typing import Dict

from shop.models import Product
from shop.util import clamp


class Inventory:
    """Stock levels per product."""

    def __init__(self):
        self.levels: Dict[int, int] = {}
        self.catalog: Dict[int, Product] = {}

    def register(self, product: Product, quantity: int = 0) -> None:
        self.catalog[product.ident] = product
        self.levels[product.ident] = quantity

    def available(self, product: Product) -> int:
        return self.levels.get(product.ident, 0)

    def take(self, product: Product, quantity: int) -> int:
        have = self.available(product)
        taken = clamp(quantity, 0, have)
        self.levels[product.ident] = have - taken
        return taken

    def restock(self, product: Product, quantity: int) -> int:
        level = self.available(product) + quantity
        self.levels[product.ident] = level
        return level

    def low_stock(self, threshold: int = 3):
        names = []
        for ident, level in self.levels.items():
            if level < threshold:
                names.append(self.catalog[ident].name)
        return sorted(names)

    def value(self) -> float:
        total = 0.0
        for ident, level in self.levels.items():
            total += self.catalog[ident].price * level
        return total

"""Price rules."""
from shop.models import Customer, Order, Product
from shop.util import clamp, money

VIP_RATE = 0.1


def vip_rate(customer: Customer) -> float:
    if customer.vip:
        return VIP_RATE
    return 0.0


def price_for(product: Product, customer: Customer) -> float:
    rate = vip_rate(customer)
    return product.discounted(rate)


def order_total(order: Order) -> float:
    total = order.total()
    rate = vip_rate(order.customer)
    return round(total * (1 - rate), 2)


def bulk_rate(quantity: int) -> float:
    steps = quantity // 10
    return clamp(steps * 0.02, 0.0, 0.2)


def quote(order: Order) -> str:
    amount = order_total(order)
    return money(amount)


class PriceBook:
    """Fixed overrides by product."""

    def __init__(self):
        self.overrides = {}

    def set(self, product: Product, price: float) -> None:
        self.overrides[product.ident] = price

    def lookup(self, product: Product) -> float:
        return self.overrides.get(product.ident, product.price)

    def cheapest(self, products):
        best = None
        for product in products:
            if best is None or self.lookup(product) < self.lookup(best):
                best = product
        return best
